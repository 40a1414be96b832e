// Expects `wasm-bindgen --target web --out-dir www/pkg` output next to this file.
import init, { simulate, operators, picard } from "./pkg/vacuum_euler_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c"];
const fmt = (v) => (typeof v === "number" ? v.toExponential(3) : String(v));

// Line plot; each series is { label, xs, ys }. With `log` the y axis is log10 |y|.
function plot(canvas, title, series, log = false) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 30;
  ctx.clearRect(0, 0, w, h);
  const tr = (v) => (log ? Math.log10(Math.max(Math.abs(v), 1e-300)) : v);
  const xs = series.flatMap((s) => s.xs);
  const ys = series.flatMap((s) => s.ys.map(tr)).filter(Number.isFinite);
  if (xs.length === 0 || ys.length === 0) return;
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y1 - y0 < 1e-12) [y0, y1] = [y0 - 1, y1 + 1];
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const px = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const py = (y) => h - pad - ((tr(y) - y0) / (y1 - y0)) * (h - 2 * pad);
  ctx.font = "11px sans-serif";
  ctx.fillStyle = "#000";
  ctx.fillText(title, pad, 14);
  ctx.fillText((log ? "1e" : "") + y1.toPrecision(3), 2, pad);
  ctx.fillText((log ? "1e" : "") + y0.toPrecision(3), 2, h - pad);
  ctx.fillText(x0.toPrecision(3), pad, h - 10);
  ctx.fillText(x1.toPrecision(3), w - pad - 20, h - 10);
  series.forEach((s, i) => {
    ctx.strokeStyle = ctx.fillStyle = COLORS[i % COLORS.length];
    ctx.beginPath();
    s.ys.forEach((y, j) => (j ? ctx.lineTo(px(s.xs[j]), py(y)) : ctx.moveTo(px(s.xs[j]), py(y))));
    ctx.stroke();
    ctx.fillText(s.label, w - pad - 40, 28 + 12 * i);
  });
}

function guarded(out, f) {
  return () => {
    $(out).classList.remove("err");
    try {
      f();
    } catch (e) {
      $(out).textContent = String(e.message ?? e);
      $(out).classList.add("err");
    }
  };
}

function runSimulate() {
  const r = JSON.parse(simulate($("scenario").value, num("amplitude"), num("n"), num("t_final")));
  const last = r.series[r.series.length - 1];
  $("simulate-out").textContent =
    `k = ${r.k}\nT* = ${r.t_star}${r.completed ? " (final time reached)" : ""}\n` +
    (r.violation ? `stopped: ${r.violation}\n` : "") +
    `energy ratio at T*: ${fmt(last.energy_ratio)}, zeroth drift: ${fmt(last.zeroth_drift)}`;
  const t = r.series.map((p) => p.t);
  plot($("simulate-energy"), "E(t) / E(0)", [{ label: "ratio", xs: t, ys: r.series.map((p) => p.energy_ratio) }]);
  plot($("simulate-psi"), "phi/xi at T*", [{ label: "phi/xi", xs: r.xi, ys: r.phi_over_xi }]);
  plot($("simulate-rho"), "Eulerian profile at T*", [
    { label: "rho", xs: r.x, ys: r.rho },
    { label: "u", xs: r.x, ys: r.u },
  ]);
}

function runOperators() {
  const r = JSON.parse(operators($("scenario").value, num("n"), num("seed")));
  $("operators-out").textContent =
    `<V f, g> = ${fmt(r.pairing[0])}\n<f, V* g> = ${fmt(r.pairing[1])}\n` +
    `relative residual = ${fmt(r.relative_residual)}`;
  // f and V* g live on the X nodes, g and V f on the Y nodes
  plot($("operators-v"), "f and V f", [
    { label: "f", xs: r.xi_x, ys: r.f },
    { label: "V f", xs: r.xi_y, ys: r.v_f },
  ]);
  plot($("operators-vstar"), "g and V* g", [
    { label: "g", xs: r.xi_y, ys: r.g },
    { label: "V* g", xs: r.xi_x, ys: r.vstar_g },
  ]);
}

function runPicard() {
  const r = JSON.parse(picard($("scenario").value, num("n"), num("horizon"), num("iterations")));
  $("picard-out").textContent =
    `horizon = ${r.horizon}\n` +
    (r.error ? `degenerate iterate: ${r.error}\n` : "") +
    `contraction run = ${r.contraction_run}, identity residual = ${fmt(r.identity_residual)}\n` +
    `distance to direct solve = ${fmt(r.d_to_direct)} (bound ${fmt(r.bound)})\n` +
    `verdict: ${r.pass ? "pass" : "fail"}`;
  plot($("picard-diffs"), "successive differences", [
    { label: "diff", xs: r.diffs.map((_, i) => i + 1), ys: r.diffs },
  ], true);
}

await init();
$("run-simulate").onclick = guarded("simulate-out", runSimulate);
$("run-operators").onclick = guarded("operators-out", runOperators);
$("run-picard").onclick = guarded("picard-out", runPicard);
