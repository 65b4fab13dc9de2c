import init, { simulate, findStatArbs, backtest } from "./pkg/statarb_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const state = { csv: null, found: null, selected: 0 };

function status(msg, isError = false) {
  $("status").textContent = msg;
  $("status").className = isError ? "err" : "";
}

function run(label, fn) {
  status(`${label}…`);
  setTimeout(() => {
    const t0 = performance.now();
    try {
      fn();
      status(`${label} done in ${(performance.now() - t0).toFixed(0)} ms`);
    } catch (e) {
      status(String(e.message ?? e), true);
    }
  }, 10);
}

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

// series: [{ values, color, dash }]
function plot(canvas, series, title) {
  const dpr = window.devicePixelRatio || 1;
  const w = canvas.clientWidth, h = canvas.clientHeight;
  canvas.width = w * dpr;
  canvas.height = h * dpr;
  const ctx = canvas.getContext("2d");
  ctx.scale(dpr, dpr);
  ctx.clearRect(0, 0, w, h);
  let lo = Infinity, hi = -Infinity, n = 0;
  for (const s of series) {
    for (const v of s.values) {
      if (Number.isFinite(v)) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
    }
    n = Math.max(n, s.values.length);
  }
  if (!(hi > lo)) { hi = lo + 1; lo -= 1; }
  const pad = { l: 52, r: 8, t: 18, b: 14 };
  const x = (i) => pad.l + (i / Math.max(1, n - 1)) * (w - pad.l - pad.r);
  const y = (v) => pad.t + (1 - (v - lo) / (hi - lo)) * (h - pad.t - pad.b);
  ctx.font = "11px system-ui";
  ctx.fillStyle = "#444";
  ctx.fillText(title, pad.l, 12);
  ctx.strokeStyle = "#eee";
  for (let k = 0; k <= 4; k++) {
    const v = lo + (k / 4) * (hi - lo);
    ctx.beginPath(); ctx.moveTo(pad.l, y(v)); ctx.lineTo(w - pad.r, y(v)); ctx.stroke();
    ctx.fillText(v.toPrecision(4), 4, y(v) + 4);
  }
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.setLineDash(s.dash ?? []);
    ctx.beginPath();
    s.values.forEach((v, i) => (i ? ctx.lineTo(x(i), y(v)) : ctx.moveTo(x(i), y(v))));
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function parseCsv(text) {
  const lines = text.trim().split("\n");
  const header = lines[0].split(",").slice(1);
  const cols = header.map(() => []);
  for (const line of lines.slice(1)) {
    line.split(",").slice(1).forEach((v, j) => cols[j].push(Number(v)));
  }
  return { header, cols };
}

function doSimulate() {
  state.csv = simulate(num("assets"), num("days"), num("trends"), num("spreadVol"), num("simSeed"));
  const { header, cols } = parseCsv(state.csv);
  plot($("pricesPlot"), cols.map((values, j) => ({ values, color: COLORS[j % COLORS.length] })),
    `${header.length} simulated prices`);
  $("trainDays").max = num("days") - 2;
}

function showBand(i) {
  state.selected = i;
  document.querySelectorAll("#found tbody tr").forEach((tr, k) => tr.classList.toggle("sel", k === i));
  const s = state.found.series[i];
  if (!s) return;
  plot($("bandPlot"), [
    { values: s.price, color: "#1f77b4" },
    { values: s.midpoint, color: "#555" },
    { values: s.midpoint.map((m) => m + 1), color: "#999", dash: [4, 3] },
    { values: s.midpoint.map((m) => m - 1), color: "#999", dash: [4, 3] },
  ], `stat-arb #${i}: in-sample price and band`);
}

function doFind() {
  if (!state.csv) doSimulate();
  state.found = JSON.parse(findStatArbs(state.csv, $("band").value, num("leverage"), num("memory"),
    num("inits"), num("findSeed"), num("trainDays")));
  const body = $("found").querySelector("tbody");
  body.innerHTML = "";
  state.found.stat_arbs.forEach((sa, i) => {
    const tr = document.createElement("tr");
    tr.innerHTML = `<td>${i}</td><td style="text-align:left">${sa.assets.join(" ")}</td>` +
      `<td>${sa.objective.toFixed(3)}</td><td>${sa.leverage.toFixed(2)}</td>`;
    tr.onclick = () => showBand(i);
    body.appendChild(tr);
  });
  if (state.found.stat_arbs.length) {
    showBand(0);
  } else {
    plot($("bandPlot"), [], "no stat-arbs found");
  }
}

function fmt(v) {
  return typeof v === "number" ? v.toFixed(4) : String(v);
}

function doBacktest() {
  if (!state.found || !state.found.stat_arbs.length) throw new Error("find stat-arbs first");
  const sa = state.found.stat_arbs[state.selected];
  const r = JSON.parse(backtest(state.csv, JSON.stringify(sa), num("tmax"), num("texit"), num("nu"),
    num("spread"), num("shorting"), num("navFloor")));
  const m = r.metrics;
  $("metrics").innerHTML =
    "<tr><th>profit</th><th>return</th><th>risk</th><th>Sharpe</th><th>drawdown</th><th>liquidated</th></tr>" +
    `<tr><td>${fmt(m.profit)}</td><td>${fmt(m.annualized_return)}</td><td>${fmt(m.annualized_risk)}</td>` +
    `<td>${fmt(m.sharpe)}</td><td>${fmt(m.max_drawdown)}</td><td>${r.terminated_early ?? "no"}</td></tr>`;
  plot($("navPlot"), [
    { values: [r.initial_cash, ...r.nav], color: "#2ca02c" },
    { values: [r.initial_cash, ...r.nav.map(() => r.initial_cash * num("navFloor"))], color: "#d62728", dash: [4, 3] },
  ], `NAV of stat-arb #${state.selected}, ${r.dates[0]} to ${r.dates[r.dates.length - 1]}`);
}

await init();
$("simulate").onclick = () => run("Simulating", doSimulate);
$("find").onclick = () => run("Searching", doFind);
$("backtest").onclick = () => run("Backtesting", doBacktest);
$("band").onchange = () => {
  const moving = $("band").value === "moving";
  $("leverage").value = moving ? 100 : 50;
  $("tmax").value = moving ? 125 : 63;
  $("trainDays").value = moving ? 450 : 500;
};
run("Simulating", doSimulate);
