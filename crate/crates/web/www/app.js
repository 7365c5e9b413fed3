import init, { frontier, frontierQuery, simulateGateVariants } from "./pkg/fairfront_web.js";

const $ = (id) => document.getElementById(id);
const FIELDS = ["framework", "eps_spec", "fairness_spec", "eps_achieved", "max_disparity", "accuracy", "coverage", "seed"];
const VARIANT_COLOURS = { between_groups: "#d1495b", to_overall: "#edae49", to_overall_no_double_count: "#00798c" };
const PAD = 42;

let docText = null;
let records = [];
let paretoSet = new Set();

function heat(t) {
  const c = Math.max(0, Math.min(1, t));
  const r = Math.round(255 * Math.min(1, 1.8 * c));
  const g = Math.round(200 * c * (1 - 0.4 * c) + 30);
  const b = Math.round(160 * (1 - c) + 40);
  return `rgb(${r},${g},${b})`;
}

function status(msg) {
  $("status").textContent = msg || "";
}

function axes(ctx, w, h, xMax, yMax, xLabel, yLabel) {
  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "11px system-ui";
  ctx.beginPath();
  ctx.moveTo(PAD, 10);
  ctx.lineTo(PAD, h - PAD);
  ctx.lineTo(w - 10, h - PAD);
  ctx.stroke();
  for (let i = 0; i <= 4; i++) {
    const x = PAD + ((w - PAD - 10) * i) / 4;
    const y = h - PAD - ((h - PAD - 10) * i) / 4;
    ctx.fillText(((xMax * i) / 4).toFixed(2), x - 10, h - PAD + 14);
    ctx.fillText(((yMax * i) / 4).toFixed(2), 4, y + 4);
  }
  ctx.fillText(xLabel, w / 2 - 20, h - 8);
  ctx.save();
  ctx.translate(12, h / 2 + 30);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(yLabel, 0, 0);
  ctx.restore();
}

function bounds() {
  const xMax = Math.max(1e-9, ...records.map((r) => r.eps_achieved)) * 1.05;
  const yMax = Math.max(1e-9, ...records.map((r) => r.max_disparity)) * 1.05;
  return { xMax, yMax };
}

function drawScatter(pinned) {
  const canvas = $("scatter");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const { xMax, yMax } = bounds();
  const sx = (v) => PAD + ((w - PAD - 10) * v) / xMax;
  const sy = (v) => h - PAD - ((h - PAD - 10) * v) / yMax;
  const maxEps = +$("maxEps").value;
  const maxGamma = +$("maxGamma").value;

  ctx.fillStyle = "rgba(0,121,140,0.07)";
  ctx.fillRect(PAD, sy(Math.min(maxGamma, yMax)), sx(Math.min(maxEps, xMax)) - PAD, h - PAD - sy(Math.min(maxGamma, yMax)));
  axes(ctx, w, h, xMax, yMax, "achieved ε", "max disparity");

  const paretoOnly = $("paretoOnly").checked;
  records.forEach((r, i) => {
    if (paretoOnly && !paretoSet.has(i)) return;
    ctx.beginPath();
    ctx.arc(sx(r.eps_achieved), sy(r.max_disparity), 5, 0, 2 * Math.PI);
    ctx.fillStyle = heat(r.coverage);
    ctx.fill();
    ctx.strokeStyle = paretoSet.has(i) ? "#000" : "rgba(0,0,0,0.2)";
    ctx.lineWidth = paretoSet.has(i) ? 1.5 : 1;
    ctx.stroke();
  });
  if (pinned !== undefined) {
    const r = records[pinned];
    ctx.beginPath();
    ctx.arc(sx(r.eps_achieved), sy(r.max_disparity), 10, 0, 2 * Math.PI);
    ctx.strokeStyle = "#d1495b";
    ctx.lineWidth = 2.5;
    ctx.stroke();
  }
  ctx.lineWidth = 1;
}

function drawHeatmap() {
  const canvas = $("heatmap");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const { xMax, yMax } = bounds();
  const objective = $("objective").value;
  const nx = 40;
  const ny = 24;
  const cw = (w - PAD - 10) / nx;
  const ch = (h - PAD - 10) / ny;
  for (let i = 0; i < nx; i++) {
    for (let j = 0; j < ny; j++) {
      const idx = frontierQuery(docText, ((i + 1) * xMax) / nx, ((j + 1) * yMax) / ny, objective);
      ctx.fillStyle = idx === undefined ? "#eee" : heat(records[idx][objective]);
      ctx.fillRect(PAD + i * cw, h - PAD - (j + 1) * ch, Math.ceil(cw), Math.ceil(ch));
    }
  }
  axes(ctx, w, h, xMax, yMax, "max ε", "max γ");
}

function showPinned(idx) {
  const table = $("pinned");
  if (idx === undefined) {
    table.innerHTML = "<tr><th>no feasible record</th></tr>";
    return;
  }
  const r = records[idx];
  table.innerHTML = FIELDS.map((f) => {
    const v = typeof r[f] === "number" && f !== "seed" ? r[f].toFixed(4) : r[f];
    return `<tr><th>${f}</th><td>${v}</td></tr>`;
  }).join("");
}

function refresh() {
  if (!docText) return;
  $("maxEpsOut").textContent = (+$("maxEps").value).toFixed(3);
  $("maxGammaOut").textContent = (+$("maxGamma").value).toFixed(3);
  try {
    const pinned = frontierQuery(docText, +$("maxEps").value, +$("maxGamma").value, $("objective").value);
    drawScatter(pinned);
    showPinned(pinned);
    $("summary").textContent = `${records.length} records, ${paretoSet.size} Pareto-optimal`;
    status("");
  } catch (e) {
    status(String(e));
  }
}

function load(text) {
  try {
    const parsed = JSON.parse(text);
    docText = text;
    records = parsed.records;
    paretoSet = new Set(Array.from(frontier(docText, "")));
  } catch (e) {
    status(`could not load frontier: ${e}`);
    return;
  }
  const { xMax, yMax } = bounds();
  for (const [id, max] of [["maxEps", xMax], ["maxGamma", yMax]]) {
    $(id).max = max;
    $(id).step = max / 500;
    $(id).value = max;
  }
  drawHeatmap();
  refresh();
}

function runGates() {
  const rho = +$("rho").value;
  const minCount = +$("minCount").value;
  $("rhoOut").textContent = rho.toFixed(3);
  $("minCountOut").textContent = minCount;
  let sim;
  try {
    sim = JSON.parse(simulateGateVariants(rho, minCount, Math.max(0, +$("seed").value | 0)));
  } catch (e) {
    status(String(e));
    return;
  }
  const canvas = $("gates");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const n = sim.stream_length;
  axes(ctx, w, h, n, n, "stream position", "admitted");
  const sx = (v) => PAD + ((w - PAD - 10) * v) / n;
  const sy = (v) => h - PAD - ((h - PAD - 10) * v) / n;
  for (const v of sim.variants) {
    ctx.beginPath();
    ctx.strokeStyle = VARIANT_COLOURS[v.variant];
    ctx.lineWidth = 2;
    v.curve.forEach((c, k) => (k ? ctx.lineTo(sx(sim.positions[k]), sy(c)) : ctx.moveTo(sx(sim.positions[k]), sy(c))));
    ctx.stroke();
  }
  ctx.lineWidth = 1;
  $("gateTotals").innerHTML =
    "<tr><th>variant</th><td>admitted</td></tr>" +
    sim.variants
      .map((v) => `<tr><th style="color:${VARIANT_COLOURS[v.variant]}">${v.variant}</th><td>${v.answered} / ${n}</td></tr>`)
      .join("");
}

async function main() {
  await init();
  for (const id of ["maxEps", "maxGamma", "paretoOnly"]) $(id).addEventListener("input", refresh);
  $("objective").addEventListener("change", () => {
    drawHeatmap();
    refresh();
  });
  for (const id of ["rho", "minCount", "seed"]) $(id).addEventListener("input", runGates);
  $("file").addEventListener("change", async (ev) => {
    const f = ev.target.files[0];
    if (f) load(await f.text());
  });
  runGates();
  try {
    const resp = await fetch("frontier.json");
    if (resp.ok) load(await resp.text());
    else status("no frontier.json next to this page; choose a file");
  } catch {
    status("no frontier.json next to this page; choose a file");
  }
}

main();
