// Trend expressions: a small arithmetic grammar over the variable x,
// sampled client-side into per-step knots so the wire schema stays
// knot-only. Grammar: + - * / ^ (right-assoc), parentheses, unary minus,
// sin cos tan exp sqrt abs log, constants pi and e.

import type { Trend } from "./schema.js";

const FUNCTIONS: Record<string, (v: number) => number> = {
  sin: Math.sin,
  cos: Math.cos,
  tan: Math.tan,
  exp: Math.exp,
  sqrt: Math.sqrt,
  abs: Math.abs,
  log: Math.log,
};

const CONSTANTS: Record<string, number> = { pi: Math.PI, e: Math.E };

export class ExpressionError extends Error {}

type Tok = { kind: "num"; value: number } | { kind: "name"; value: string } | { kind: "op"; value: string };

function tokenize(src: string): Tok[] {
  const toks: Tok[] = [];
  let i = 0;
  while (i < src.length) {
    const ch = src[i];
    if (ch === " " || ch === "\t") {
      i++;
    } else if (/[0-9.]/.test(ch)) {
      const m = /^[0-9]*\.?[0-9]+(e[+-]?[0-9]+)?/i.exec(src.slice(i));
      if (!m) throw new ExpressionError(`bad number at position ${i}`);
      toks.push({ kind: "num", value: parseFloat(m[0]) });
      i += m[0].length;
    } else if (/[a-zA-Z_]/.test(ch)) {
      const m = /^[a-zA-Z_]+/.exec(src.slice(i))!;
      toks.push({ kind: "name", value: m[0] });
      i += m[0].length;
    } else if ("+-*/^()".includes(ch)) {
      toks.push({ kind: "op", value: ch });
      i++;
    } else {
      throw new ExpressionError(`unexpected character ${JSON.stringify(ch)} at position ${i}`);
    }
  }
  return toks;
}

/** Compile an expression in x to a plain function. Throws ExpressionError. */
export function compileExpression(src: string): (x: number) => number {
  const toks = tokenize(src);
  let pos = 0;

  const peek = () => toks[pos];
  const takeOp = (value: string): boolean => {
    const t = toks[pos];
    if (t && t.kind === "op" && t.value === value) {
      pos++;
      return true;
    }
    return false;
  };

  type Node = (x: number) => number;

  function atom(): Node {
    const t = peek();
    if (!t) throw new ExpressionError("unexpected end of expression");
    if (takeOp("(")) {
      const inner = expr();
      if (!takeOp(")")) throw new ExpressionError("missing closing parenthesis");
      return inner;
    }
    if (t.kind === "num") {
      pos++;
      return () => t.value;
    }
    if (t.kind === "name") {
      pos++;
      const name = t.value.toLowerCase();
      if (name === "x") return (x) => x;
      if (name in CONSTANTS) return () => CONSTANTS[name];
      if (name in FUNCTIONS) {
        if (!takeOp("(")) throw new ExpressionError(`${name} needs parentheses`);
        const arg = expr();
        if (!takeOp(")")) throw new ExpressionError(`missing ) after ${name}(...`);
        const fn = FUNCTIONS[name];
        return (x) => fn(arg(x));
      }
      throw new ExpressionError(`unknown name ${JSON.stringify(t.value)}`);
    }
    throw new ExpressionError(`unexpected token ${JSON.stringify(t.value)}`);
  }

  function power(): Node {
    const base = atom();
    if (takeOp("^")) {
      const exponent = unary(); // right-associative; exponent may be signed
      return (x) => Math.pow(base(x), exponent(x));
    }
    return base;
  }

  function unary(): Node {
    // binds looser than ^, so -x^2 is -(x^2)
    if (takeOp("-")) {
      const inner = unary();
      return (x) => -inner(x);
    }
    return power();
  }

  function term(): Node {
    let node = unary();
    for (;;) {
      if (takeOp("*")) {
        const rhs = unary();
        const lhs = node;
        node = (x) => lhs(x) * rhs(x);
      } else if (takeOp("/")) {
        const rhs = unary();
        const lhs = node;
        node = (x) => lhs(x) / rhs(x);
      } else {
        return node;
      }
    }
  }

  function expr(): Node {
    let node = term();
    for (;;) {
      if (takeOp("+")) {
        const rhs = term();
        const lhs = node;
        node = (x) => lhs(x) + rhs(x);
      } else if (takeOp("-")) {
        const rhs = term();
        const lhs = node;
        node = (x) => lhs(x) - rhs(x);
      } else {
        return node;
      }
    }
  }

  const fn = expr();
  if (pos !== toks.length) throw new ExpressionError(`trailing input after position ${pos}`);
  fn(0); // force one evaluation so obvious errors surface at compile time
  return fn;
}

/** Sample an expression into one knot per step over [tStart, tEnd]. */
export function sampleTrend(
  src: string,
  tStart: number,
  tEnd: number,
  channel: number,
  confidence: number,
): Trend {
  if (!Number.isInteger(tStart) || !Number.isInteger(tEnd) || tEnd <= tStart) {
    throw new ExpressionError(`invalid range [${tStart}, ${tEnd}]`);
  }
  const fn = compileExpression(src);
  const knots: [number, number][] = [];
  for (let t = tStart; t <= tEnd; t++) {
    const v = fn(t);
    if (!Number.isFinite(v)) throw new ExpressionError(`expression is not finite at x=${t}`);
    knots.push([t, v]);
  }
  return { knots, c: channel, w: confidence };
}

/** Knot-list text like "0:0.1, 23:0.9" into a Trend. */
export function parseKnotList(src: string, channel: number, confidence: number): Trend {
  const knots: [number, number][] = [];
  for (const part of src.split(",")) {
    const bit = part.trim();
    if (!bit) continue;
    const m = /^(\d+)\s*:\s*(-?[0-9.]+(?:e[+-]?\d+)?)$/i.exec(bit);
    if (!m) throw new ExpressionError(`bad knot ${JSON.stringify(bit)}; expected "t:value"`);
    knots.push([parseInt(m[1], 10), parseFloat(m[2])]);
  }
  if (knots.length < 2) throw new ExpressionError("need at least two knots");
  for (let i = 1; i < knots.length; i++) {
    if (knots[i][0] <= knots[i - 1][0]) {
      throw new ExpressionError(`knot times must be strictly increasing (saw ${knots[i - 1][0]} then ${knots[i][0]})`);
    }
  }
  return { knots, c: channel, w: confidence };
}
