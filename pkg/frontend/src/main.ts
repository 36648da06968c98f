// DOM wiring for the editor page. One session per tab; regenerate is
// disabled while a request is in flight.

import { ApiError, createSession, listCheckpoints, requestEdit } from "./api.js";
import { ChartInputs, drawChart, plotArea } from "./chart.js";
import { Segment } from "./schema.js";
import {
  acceptSeries,
  addSegment,
  addTrend,
  clearConstraints,
  editRequestBody,
  initialState,
  placeAnchor,
  EditorState,
} from "./state.js";
import { snapToStep } from "./transform.js";
import { ExpressionError, parseKnotList, sampleTrend } from "./trend.js";

const SERVICE = (window as { TSEDIT_SERVICE?: string }).TSEDIT_SERVICE ?? "http://127.0.0.1:8080";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

let state: EditorState | null = null;
let sessionId: string | null = null;
const residuals = new Map<string, number>();

function setStatus(text: string, isError = false): void {
  const el = $("status");
  el.textContent = text;
  el.className = isError ? "status error" : "status";
}

function redraw(): void {
  if (!state) return;
  const canvas = $("chart") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const inputs: ChartInputs = {
    latest: state.latest,
    previous: state.previous,
    constraints: state.constraints,
    channel: state.channel,
    seqLen: state.seqLen,
    residuals,
  };
  drawChart(ctx, plotArea(canvas, state.seqLen), inputs);
  $("constraint-json").textContent = JSON.stringify(state.constraints, null, 1);
}

async function boot(): Promise<void> {
  try {
    const checkpoints = await listCheckpoints(SERVICE);
    if (!checkpoints.length) {
      setStatus("no checkpoints on the service; train one first (tsedit train)", true);
      return;
    }
    const select = $("checkpoint") as HTMLSelectElement;
    select.innerHTML = "";
    for (const ck of checkpoints) {
      const opt = document.createElement("option");
      opt.value = ck.id;
      opt.textContent = `${ck.id} (${ck.dataset}, L=${ck.L}, D=${ck.D})`;
      select.appendChild(opt);
    }
    await openSession(select.value);
    select.onchange = () => void openSession(select.value);
  } catch (err) {
    setStatus(`cannot reach service at ${SERVICE}: ${String(err)}`, true);
  }
}

async function openSession(checkpoint: string): Promise<void> {
  const info = await createSession(SERVICE, checkpoint);
  sessionId = info.session;
  state = initialState(info.L, info.D);
  const channel = $("channel") as HTMLSelectElement;
  channel.innerHTML = "";
  for (let c = 0; c < info.D; c++) {
    const opt = document.createElement("option");
    opt.value = String(c);
    opt.textContent = `channel ${c}`;
    channel.appendChild(opt);
  }
  residuals.clear();
  setStatus(`session ${info.session} on ${checkpoint}: L=${info.L}, D=${info.D}, T=${info.T}`);
  redraw();
}

async function regenerate(): Promise<void> {
  if (!state || !sessionId || state.pending) return;
  const btn = $("regenerate") as HTMLButtonElement;
  state.pending = true;
  btn.disabled = true;
  setStatus("sampling...");
  try {
    const seedField = ($("seed") as HTMLInputElement).value.trim();
    state.seed = seedField === "" ? null : parseInt(seedField, 10);
    const resp = await requestEdit(SERVICE, sessionId, editRequestBody(state));
    acceptSeries(state, resp.series[0]);
    residuals.clear();
    for (const a of resp.anchors) residuals.set(`${a.t}:${a.c}`, a.residual);
    const parts = [`seed ${resp.seed}`];
    if (resp.mad !== null) parts.push(`anchor MAD ${resp.mad.toFixed(4)}`);
    for (const s of resp.achieved_stats) {
      parts.push(`${s.stat}[${s.s}..${s.e}] -> ${s.achieved.toFixed(3)} (target ${s.target})`);
    }
    setStatus(parts.join(" | "));
  } catch (err) {
    if (err instanceof ApiError) setStatus(`server rejected the request: ${err.detail}`, true);
    else setStatus(String(err), true);
  } finally {
    state.pending = false;
    btn.disabled = false;
    redraw();
  }
}

function wireControls(): void {
  const canvas = $("chart") as HTMLCanvasElement;
  canvas.onclick = (ev) => {
    if (!state) return;
    const rect = canvas.getBoundingClientRect();
    const hit = snapToStep(plotArea(canvas, state.seqLen), ev.clientX - rect.left, ev.clientY - rect.top);
    if (!hit) return; // clicks outside the plot area are ignored
    const confidence = parseFloat(($("confidence") as HTMLInputElement).value);
    placeAnchor(state, hit.t, Math.round(hit.v * 1000) / 1000, confidence);
    redraw();
  };

  ($("confidence") as HTMLInputElement).oninput = () => {
    $("confidence-label").textContent = ($("confidence") as HTMLInputElement).value;
  };

  ($("channel") as HTMLSelectElement).onchange = () => {
    if (!state) return;
    state.channel = parseInt(($("channel") as HTMLSelectElement).value, 10);
    redraw();
  };

  $("regenerate").onclick = () => void regenerate();

  $("clear").onclick = () => {
    if (!state) return;
    clearConstraints(state);
    residuals.clear();
    setStatus("constraints cleared");
    redraw();
  };

  $("add-trend").onclick = () => {
    if (!state) return;
    const text = ($("trend-input") as HTMLInputElement).value.trim();
    const confidence = parseFloat(($("trend-confidence") as HTMLInputElement).value);
    try {
      const trend = text.includes(":")
        ? parseKnotList(text, state.channel, confidence)
        : sampleTrend(text, 0, state.seqLen - 1, state.channel, confidence);
      addTrend(state, trend);
      setStatus(`trend on channel ${state.channel}: ${trend.knots.length} knots`);
    } catch (err) {
      if (err instanceof ExpressionError) setStatus(`trend input: ${err.message}`, true);
      else throw err;
    }
    redraw();
  };

  $("add-segment").onclick = () => {
    if (!state) return;
    const s = parseInt(($("seg-start") as HTMLInputElement).value, 10);
    const e = parseInt(($("seg-end") as HTMLInputElement).value, 10);
    const target = parseFloat(($("seg-target") as HTMLInputElement).value);
    const stat = ($("seg-stat") as HTMLSelectElement).value as Segment["stat"];
    if (Number.isNaN(s) || Number.isNaN(e) || Number.isNaN(target) || e < s) {
      setStatus("segment needs s <= e and a numeric target", true);
      return;
    }
    addSegment(state, { s, e, c: state.channel, stat, target, beta: 3.0, w: 1.0 });
    setStatus(`segment ${stat}[${s}..${e}] target ${target} on channel ${state.channel}`);
    redraw();
  };
}

wireControls();
void boot();
