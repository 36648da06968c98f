"""Minimal dense-tensor math with reverse-mode automatic differentiation.

Graphs are built once (define-then-run) and are immutable afterwards;
every evaluation owns its value/gradient buffers, so one graph can be
evaluated concurrently under different bindings. Gradients are available
with respect to any leaf, inputs as well as parameters.

Supported ops: matmul, add, sub, mul (Hadamard), broadcast-add of a bias
row, scale by a constant, elementwise tanh/relu/sin/cos, reduce-sum over
an index range, summed squared difference, concat, reshape.
"""

from dataclasses import dataclass, field

import numpy as np

from tsedit import backend


class GraphError(ValueError):
    """Graph construction or evaluation used incompatible shapes/ids."""


def as_tensor(x, shape=None):
    """Coerce to a C-contiguous float64 array, optionally checking shape."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if shape is not None and a.shape != tuple(shape):
        raise GraphError(f"expected shape {tuple(shape)}, got {a.shape}")
    return a


@dataclass(frozen=True)
class Node:
    op: str
    inputs: tuple
    shape: tuple
    payload: object = None


@dataclass
class Graph:
    """Topologically ordered op records; leaves are the differentiable inputs."""

    nodes: list = field(default_factory=list)
    leaves: dict = field(default_factory=dict)  # name -> node id

    # -- construction ----------------------------------------------------

    def _push(self, node):
        self.nodes.append(node)
        return len(self.nodes) - 1

    def _shape(self, nid):
        try:
            return self.nodes[nid].shape
        except IndexError:
            raise GraphError(f"unknown node id {nid}") from None

    def leaf(self, name, shape):
        if name in self.leaves:
            raise GraphError(f"duplicate leaf name {name!r}")
        nid = self._push(Node("leaf", (), tuple(shape), name))
        self.leaves[name] = nid
        return nid

    def const(self, value):
        value = as_tensor(value)
        return self._push(Node("const", (), value.shape, value))

    def matmul(self, a, b):
        sa, sb = self._shape(a), self._shape(b)
        if len(sa) != 2 or len(sb) != 2 or sa[1] != sb[0]:
            raise GraphError(f"matmul node #{len(self.nodes)}: incompatible shapes {sa} @ {sb}")
        return self._push(Node("matmul", (a, b), (sa[0], sb[1])))

    def _binary_same(self, op, a, b):
        sa, sb = self._shape(a), self._shape(b)
        if sa != sb:
            raise GraphError(f"{op} node #{len(self.nodes)}: shape mismatch {sa} vs {sb}")
        return self._push(Node(op, (a, b), sa))

    def add(self, a, b):
        return self._binary_same("add", a, b)

    def sub(self, a, b):
        return self._binary_same("sub", a, b)

    def mul(self, a, b):
        return self._binary_same("mul", a, b)

    def badd(self, a, v):
        sa, sv = self._shape(a), self._shape(v)
        if len(sa) != 2 or sv != (sa[1],):
            raise GraphError(f"badd node #{len(self.nodes)}: cannot broadcast {sv} onto {sa}")
        return self._push(Node("badd", (a, v), sa))

    def scale(self, a, s):
        return self._push(Node("scale", (a,), self._shape(a), float(s)))

    def _unary(self, op, a):
        return self._push(Node(op, (a,), self._shape(a)))

    def tanh(self, a):
        return self._unary("tanh", a)

    def relu(self, a):
        return self._unary("relu", a)

    def sin(self, a):
        return self._unary("sin", a)

    def cos(self, a):
        return self._unary("cos", a)

    def reduce_sum(self, a, region=None):
        """Sum to a (1,) scalar; region=(r0, r1, c0, c1) restricts a 2-D input."""
        sa = self._shape(a)
        if region is not None:
            r0, r1, c0, c1 = region
            if len(sa) != 2:
                raise GraphError(f"reduce_sum node #{len(self.nodes)}: region needs a 2-D input, got {sa}")
            if not (0 <= r0 <= r1 <= sa[0] and 0 <= c0 <= c1 <= sa[1]):
                raise GraphError(f"reduce_sum node #{len(self.nodes)}: region {region} outside shape {sa}")
            region = (int(r0), int(r1), int(c0), int(c1))
        return self._push(Node("reduce_sum", (a,), (1,), region))

    def sqdiff(self, a, b):
        sa, sb = self._shape(a), self._shape(b)
        if sa != sb:
            raise GraphError(f"sqdiff node #{len(self.nodes)}: shape mismatch {sa} vs {sb}")
        return self._push(Node("sqdiff", (a, b), (1,)))

    def concat(self, parts, axis=0):
        shapes = [self._shape(p) for p in parts]
        if not parts:
            raise GraphError("concat of no inputs")
        nd = len(shapes[0])
        if any(len(s) != nd for s in shapes) or not 0 <= axis < nd:
            raise GraphError(f"concat node #{len(self.nodes)}: rank mismatch {shapes}")
        for s in shapes[1:]:
            if any(s[d] != shapes[0][d] for d in range(nd) if d != axis):
                raise GraphError(f"concat node #{len(self.nodes)}: off-axis mismatch {shapes}")
        out = list(shapes[0])
        out[axis] = sum(s[axis] for s in shapes)
        return self._push(Node("concat", tuple(parts), tuple(out), axis))

    def reshape(self, a, shape):
        sa = self._shape(a)
        shape = tuple(int(d) for d in shape)
        if int(np.prod(sa)) != int(np.prod(shape)):
            raise GraphError(f"reshape node #{len(self.nodes)}: {sa} has wrong size for {shape}")
        return self._push(Node("reshape", (a,), shape))

    @property
    def output(self):
        if not self.nodes:
            raise GraphError("empty graph")
        return len(self.nodes) - 1

    def ancestors(self, nid):
        """All node ids the given node depends on, itself included."""
        seen = set()
        stack = [nid]
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(self.nodes[cur].inputs)
        return seen


class Evaluation:
    """Per-call forward state: cached node outputs for one set of bindings."""

    def __init__(self, graph, output):
        self.graph = graph
        self.output = output
        self._values = [None] * len(graph.nodes)

    def value(self, nid):
        v = self._values[nid]
        if v is None:
            raise GraphError(f"node #{nid} was not computed in this evaluation")
        return v


def _compute(node, vals, K):
    op = node.op
    if op == "const":
        return node.payload
    a = vals[node.inputs[0]] if node.inputs else None
    if op == "matmul":
        return K.matmul(a, vals[node.inputs[1]])
    if op == "add":
        return K.add(a, vals[node.inputs[1]])
    if op == "sub":
        return K.sub(a, vals[node.inputs[1]])
    if op == "mul":
        return K.mul(a, vals[node.inputs[1]])
    if op == "badd":
        return K.badd(a, vals[node.inputs[1]])
    if op == "scale":
        return K.scale(a, node.payload)
    if op == "tanh":
        return K.tanh(a)
    if op == "relu":
        return K.relu(a)
    if op == "sin":
        return K.sin(a)
    if op == "cos":
        return K.cos(a)
    if op == "reduce_sum":
        if node.payload is None:
            r = a.reshape(1, -1)
            s = K.region_sum(r, 0, 1, 0, r.shape[1])
        else:
            s = K.region_sum(a, *node.payload)
        return np.array([s])
    if op == "sqdiff":
        return np.array([K.sqdiff(a, vals[node.inputs[1]])])
    if op == "concat":
        return np.ascontiguousarray(np.concatenate([vals[i] for i in node.inputs], axis=node.payload))
    if op == "reshape":
        return np.ascontiguousarray(a.reshape(node.shape))
    raise GraphError(f"unknown op {op!r}")


def forward_eval(graph, bindings, output=None):
    """Evaluate the graph under the given leaf bindings.

    Only ancestors of the requested output node are computed. Returns an
    Evaluation whose .value(node) gives any cached intermediate.
    """
    output = graph.output if output is None else output
    needed = graph.ancestors(output)
    for name in graph.leaves:
        if graph.leaves[name] in needed and name not in bindings:
            raise GraphError(f"leaf {name!r} not bound")
    ev = Evaluation(graph, output)
    vals = ev._values
    K = backend.kernels
    for nid in sorted(needed):
        node = graph.nodes[nid]
        if node.op == "leaf":
            v = as_tensor(bindings[node.payload])
            if v.shape != node.shape:
                raise GraphError(f"leaf {node.payload!r}: bound shape {v.shape}, declared {node.shape}")
            vals[nid] = v
        else:
            vals[nid] = _compute(node, vals, K)
    return ev


def backward_grad(ev, wrt, seed=None):
    """Gradients of the evaluated output with respect to the named leaves.

    The output must be a scalar unless a seed cotangent of the output's
    shape is supplied. Returns {leaf name: gradient array of leaf shape}.
    """
    graph = ev.graph
    ids = {}
    for name in wrt:
        if name not in graph.leaves:
            raise GraphError(f"{name!r} is not a leaf of this graph")
        ids[name] = graph.leaves[name]
    out = ev.output
    out_val = ev.value(out)
    if seed is None:
        if out_val.size != 1:
            raise GraphError(f"output has shape {out_val.shape}; supply a seed cotangent")
        seed = np.ones_like(out_val)
    else:
        seed = as_tensor(seed, out_val.shape)

    # restrict the sweep to nodes lying between a requested leaf and the output
    reaches = set(ids.values())
    for nid in range(len(graph.nodes)):
        if any(i in reaches for i in graph.nodes[nid].inputs):
            reaches.add(nid)
    active = reaches & graph.ancestors(out)

    K = backend.kernels
    vals = ev._values
    grads = [None] * len(graph.nodes)
    grads[out] = seed.copy()

    def send(nid, g, owned):
        # pass-through gradients (owned=False) may alias a sibling's, so the
        # first stored contribution must be a private copy before iadd can hit it
        if grads[nid] is None:
            grads[nid] = g if owned else g.copy()
        else:
            K.iadd(grads[nid], g)

    for nid in sorted(active, reverse=True):
        g = grads[nid]
        if g is None:
            continue
        node = graph.nodes[nid]
        op = node.op
        ins = node.inputs
        if op in ("leaf", "const"):
            continue
        if op == "matmul":
            a, b = ins
            if a in active:
                send(a, K.matmul_bt(g, vals[b]), True)
            if b in active:
                send(b, K.matmul_at(vals[a], g), True)
        elif op == "add":
            for i in ins:
                if i in active:
                    send(i, g, False)
        elif op == "sub":
            a, b = ins
            if a in active:
                send(a, g, False)
            if b in active:
                send(b, K.scale(g, -1.0), True)
        elif op == "mul":
            a, b = ins
            if a in active:
                send(a, K.mul(g, vals[b]), True)
            if b in active:
                send(b, K.mul(g, vals[a]), True)
        elif op == "badd":
            a, v = ins
            if a in active:
                send(a, g, False)
            if v in active:
                send(v, K.colsum(g), True)
        elif op == "scale":
            send(ins[0], K.scale(g, node.payload), True)
        elif op == "tanh":
            send(ins[0], K.tanh_bwd(vals[nid], g), True)
        elif op == "relu":
            send(ins[0], K.relu_bwd(vals[ins[0]], g), True)
        elif op == "sin":
            send(ins[0], K.sin_bwd(vals[ins[0]], g), True)
        elif op == "cos":
            send(ins[0], K.cos_bwd(vals[ins[0]], g), True)
        elif op == "reduce_sum":
            gx = np.zeros(graph.nodes[ins[0]].shape)
            if node.payload is None:
                gx += g[0]
            else:
                K.region_add(gx, *node.payload, g[0])
            send(ins[0], gx, True)
        elif op == "sqdiff":
            a, b = ins
            d = K.sqdiff_bwd(vals[a], vals[b], g[0])
            if b in active:
                send(b, K.scale(d, -1.0), True)
            if a in active:
                send(a, d, True)
        elif op == "concat":
            off = 0
            axis = node.payload
            for i in ins:
                w = graph.nodes[i].shape[axis]
                sl = [slice(None)] * len(node.shape)
                sl[axis] = slice(off, off + w)
                if i in active:
                    send(i, np.array(g[tuple(sl)]), True)
                off += w
        elif op == "reshape":
            send(ins[0], np.array(g).reshape(graph.nodes[ins[0]].shape), True)
        else:
            raise GraphError(f"no backward rule for op {op!r}")

    result = {}
    for name, nid in ids.items():
        g = grads[nid]
        result[name] = np.zeros(graph.nodes[nid].shape) if g is None else g
    return result


def grad_check(graph, bindings, leaf, eps=1e-5, output=None):
    """Max relative error between analytic and central-difference gradients.

    Error per component is |analytic - numeric| / max(1, |analytic|); the
    maximum over the leaf's components is returned.
    """
    ev = forward_eval(graph, bindings, output=output)
    analytic = backward_grad(ev, [leaf])[leaf]
    base = as_tensor(bindings[leaf]).copy()
    numeric = np.zeros_like(base)
    flat = base.reshape(-1)
    num_flat = numeric.reshape(-1)
    probe = dict(bindings)
    probe[leaf] = base
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = forward_eval(graph, probe, output=output)
        flat[i] = orig - eps
        lo = forward_eval(graph, probe, output=output)
        flat[i] = orig
        num_flat[i] = (float(hi.value(hi.output)[0]) - float(lo.value(lo.output)[0])) / (2.0 * eps)
    denom = np.maximum(1.0, np.abs(analytic))
    return float(np.max(np.abs(analytic - numeric) / denom))
