import init, { penalty_curve, evolve_backlog, compare_strategies } from "./pkg/tiersched_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
}

// xs, ys share one scale per series list
function plot(canvas, xs, series, labels) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 30;
  axes(ctx, w, h, pad);
  const xmax = Math.max(...xs) || 1;
  const ymax = Math.max(...series.flat()) || 1;
  const ymin = Math.min(0, ...series.flat());
  const px = (x) => pad + (x / xmax) * (w - 2 * pad);
  const py = (y) => h - pad - ((y - ymin) / (ymax - ymin || 1)) * (h - 2 * pad);
  const colors = ["#1f77b4", "#d62728", "#2ca02c"];
  series.forEach((ys, s) => {
    ctx.strokeStyle = colors[s % colors.length];
    ctx.beginPath();
    ys.forEach((y, i) => (i ? ctx.lineTo(px(xs[i]), py(y)) : ctx.moveTo(px(xs[i]), py(y))));
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(labels[s], w - pad - 160, pad + 14 * s);
  });
  ctx.fillStyle = "#444";
  ctx.fillText(ymax.toPrecision(4), 2, pad - 4);
  ctx.fillText(String(xmax), w - pad - 20, h - pad + 14);
}

function drawCurve() {
  try {
    const c = JSON.parse(penalty_curve(num("ceiling"), num("scale"), num("cost"), num("maxx"), 200));
    // scale the linear cost onto the penalty axis so both shapes are visible
    const top = Math.max(...c.penalty) || 1;
    const lin = c.linear.map((v) => (v / c.linear[c.linear.length - 1]) * top);
    plot($("curve"), c.x, [c.penalty, lin], ["penalty", "linear cost (rescaled)"]);
    $("curve-msg").textContent = `penalty at max time: ${c.penalty[c.penalty.length - 1].toPrecision(5)}`;
    $("curve-msg").className = "note";
  } catch (e) {
    $("curve-msg").textContent = e.message ?? String(e);
    $("curve-msg").className = "err";
  }
}

function drawQueues(canvas, jobs, before, after) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const exec = new Map(jobs.map((j) => [j.id, j]));
  const costs = jobs.map((j) => j.cost);
  const lo = Math.min(...costs);
  const hi = Math.max(...costs);
  const rows = [...before.map((q, k) => [`fcfs q${k + 1}`, q]), ...after.map((q, k) => [`ga q${k + 1}`, q])];
  const span = Math.max(...rows.map(([, q]) => q.reduce((s, id) => s + exec.get(id).exec, 0))) || 1;
  const rowH = (h - 10) / rows.length;
  rows.forEach(([label, q], r) => {
    let t = 0;
    const y = 5 + r * rowH;
    ctx.fillStyle = "#333";
    ctx.fillText(label, 2, y + rowH / 2 + 4);
    for (const id of q) {
      const j = exec.get(id);
      const x0 = 60 + (t / span) * (w - 70);
      const x1 = 60 + ((t + j.exec) / span) * (w - 70);
      // darker bars carry a higher waiting cost
      const shade = hi > lo ? (j.cost - lo) / (hi - lo) : 0.5;
      ctx.fillStyle = `hsl(210, 70%, ${80 - 50 * shade}%)`;
      ctx.fillRect(x0, y + 2, x1 - x0 - 1, rowH - 4);
      t += j.exec;
    }
  });
}

function runEvolve() {
  $("ev-msg").textContent = "running...";
  $("ev-msg").className = "note";
  setTimeout(() => {
    try {
      const r = JSON.parse(evolve_backlog(num("ev-seed"), num("ev-jobs"), num("ev-queues"), num("ev-gens"), $("ev-obj").value));
      $("ev-msg").textContent =
        `cost ${r.initial_cost.toFixed(0)} -> ${r.best_cost.toFixed(0)} (${r.improvement_pct.toFixed(2)}% better)`;
      const g = r.trace.map((s) => s.generation);
      plot($("ev-trace"), g, [r.trace.map((s) => s.best), r.trace.map((s) => s.mean)], ["best", "population mean"]);
      drawQueues($("ev-queues-c"), r.jobs, r.initial, r.best);
    } catch (e) {
      $("ev-msg").textContent = e.message ?? String(e);
      $("ev-msg").className = "err";
    }
  }, 10);
}

function runCompare() {
  $("cmp-msg").textContent = "running...";
  $("cmp-msg").className = "note";
  setTimeout(() => {
    try {
      const rows = JSON.parse(
        compare_strategies(num("cmp-seed"), num("cmp-reps"), num("cmp-jobs"), num("cmp-rate"), num("cmp-gens")),
      );
      const t = $("cmp-table");
      t.innerHTML = "<tr><th>strategy</th><th>rank</th><th>mean waiting cost</th><th>p vs next</th></tr>";
      for (const r of rows) {
        const tr = t.insertRow();
        [r.strategy, r.rank, r.mean.toFixed(0), r.p_next == null ? "" : r.p_next.toFixed(4)].forEach((v) => {
          tr.insertCell().textContent = v;
        });
      }
      $("cmp-msg").textContent = "one-sided sign test over paired replications";
    } catch (e) {
      $("cmp-msg").textContent = e.message ?? String(e);
      $("cmp-msg").className = "err";
    }
  }, 10);
}

await init();
for (const id of ["ceiling", "scale", "cost", "maxx"]) $(id).addEventListener("input", drawCurve);
$("ev-run").addEventListener("click", runEvolve);
$("cmp-run").addEventListener("click", runCompare);
drawCurve();
