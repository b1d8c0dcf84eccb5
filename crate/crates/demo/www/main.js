import init, { bootstrap_overlap, churn_stripes, gp_ei_curve } from "./pkg/xchurn_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function clear(ctx) {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
}

// Histogram of shared-unique fractions with the 0.632² reference line.
function drawOverlap(values) {
  const ctx = $("ov-canvas").getContext("2d");
  clear(ctx);
  const { width: w, height: h } = ctx.canvas;
  const lo = 0.3, hi = 0.5, bins = 60;
  const counts = new Array(bins).fill(0);
  for (const v of values) {
    const b = Math.floor(((v - lo) / (hi - lo)) * bins);
    if (b >= 0 && b < bins) counts[b]++;
  }
  const top = Math.max(1, ...counts);
  ctx.fillStyle = "#4a7ab5";
  counts.forEach((c, i) => {
    const bh = (c / top) * (h - 20);
    ctx.fillRect((i / bins) * w, h - bh, w / bins - 1, bh);
  });
  const ref = (1 - Math.exp(-1)) ** 2;
  const x = ((ref - lo) / (hi - lo)) * w;
  ctx.strokeStyle = "#c33";
  ctx.beginPath();
  ctx.moveTo(x, 0);
  ctx.lineTo(x, h);
  ctx.stroke();
  ctx.fillStyle = "#333";
  ctx.fillText(lo.toFixed(2), 2, 12);
  ctx.fillText(hi.toFixed(2), w - 28, 12);
}

function runOverlap() {
  try {
    const v = bootstrap_overlap(num("ov-n"), num("ov-pairs"), num("ov-seed"));
    const mean = v.reduce((a, b) => a + b, 0) / v.length;
    $("ov-out").textContent = `mean shared-unique fraction ${mean.toFixed(4)} (limit ${((1 - Math.exp(-1)) ** 2).toFixed(4)})`;
    drawOverlap(v);
  } catch (e) {
    $("ov-out").textContent = String(e);
  }
}

// One row per seed, one column per test example; columns sorted so that
// examples with no disagreement sit on the left.
function drawStripes(res) {
  const ctx = $("st-canvas").getContext("2d");
  clear(ctx);
  const { width: w, height: h } = ctx.canvas;
  const n = res.ids.length;
  const flips = res.ids.map((_, j) => {
    const col = res.erm.map((row) => row[j]);
    return col.some((c) => c !== col[0]) ? 1 : 0;
  });
  const order = [...Array(n).keys()].sort((a, b) => flips[a] - flips[b] || a - b);
  const blocks = [["ERM", res.erm], ["twin", res.twin]];
  const rows = res.erm.length;
  const bh = (h - 30) / (2 * rows);
  blocks.forEach(([name, m], bi) => {
    const y0 = bi * (rows * bh + 30);
    ctx.fillStyle = "#333";
    ctx.fillText(name, 2, y0 + 10);
    m.forEach((row, s) => {
      order.forEach((j, x) => {
        ctx.fillStyle = row[j] === 1 ? "#d9822b" : "#2b6cd9";
        ctx.fillRect(40 + (x / n) * (w - 40), y0 + 14 + s * bh, (w - 40) / n + 0.5, bh - 1);
      });
    });
  });
}

function runStripes() {
  $("st-out").textContent = "training…";
  setTimeout(() => {
    try {
      const res = JSON.parse(churn_stripes(num("st-lambda"), num("st-sep"), num("st-seeds"), 0));
      $("st-out").textContent =
        `mean pairwise churn: ERM ${(100 * res.erm_churn).toFixed(1)}%, twin ${(100 * res.twin_churn).toFixed(1)}%`;
      drawStripes(res);
    } catch (e) {
      $("st-out").textContent = String(e);
    }
  }, 10);
}

const obs = { xs: [], ys: [] };
const GX = [-3, 4];
const GY = [0, 1];
const grid = Array.from({ length: 200 }, (_, i) => GX[0] + ((GX[1] - GX[0]) * i) / 199);

function drawGp() {
  const c = $("gp-canvas").getContext("2d");
  const e = $("ei-canvas").getContext("2d");
  clear(c);
  clear(e);
  const { width: w, height: h } = c.canvas;
  const px = (x) => ((x - GX[0]) / (GX[1] - GX[0])) * w;
  const py = (y) => h - ((y - GY[0]) / (GY[1] - GY[0])) * h;
  const out = gp_ei_curve(new Float64Array(obs.xs), new Float64Array(obs.ys), new Float64Array(grid));
  const n = grid.length;
  const mu = out.slice(0, n), sd = out.slice(n, 2 * n), ei = out.slice(2 * n);
  c.fillStyle = "rgba(74,122,181,0.2)";
  c.beginPath();
  grid.forEach((x, i) => c.lineTo(px(x), py(mu[i] + 2 * sd[i])));
  [...grid].reverse().forEach((x, k) => c.lineTo(px(x), py(mu[n - 1 - k] - 2 * sd[n - 1 - k])));
  c.fill();
  c.strokeStyle = "#4a7ab5";
  c.beginPath();
  grid.forEach((x, i) => c.lineTo(px(x), py(mu[i])));
  c.stroke();
  c.fillStyle = "#c33";
  obs.xs.forEach((x, i) => c.fillRect(px(x) - 3, py(obs.ys[i]) - 3, 6, 6));
  const top = Math.max(1e-12, ...ei);
  const eh = e.canvas.height;
  e.strokeStyle = "#2a8a4a";
  e.beginPath();
  grid.forEach((x, i) => e.lineTo(px(x), eh - (ei[i] / top) * (eh - 5)));
  e.stroke();
  const best = ei.indexOf(Math.max(...ei));
  $("gp-out").textContent = obs.xs.length
    ? `next λ by EI: 10^${grid[best].toFixed(2)} = ${(10 ** grid[best]).toPrecision(3)}`
    : "prior: add observations";
}

function onGpClick(ev) {
  if (ev.shiftKey) {
    obs.xs = [];
    obs.ys = [];
  } else {
    const r = ev.target.getBoundingClientRect();
    obs.xs.push(GX[0] + ((ev.clientX - r.left) / r.width) * (GX[1] - GX[0]));
    obs.ys.push(GY[0] + (1 - (ev.clientY - r.top) / r.height) * (GY[1] - GY[0]));
  }
  try {
    drawGp();
  } catch (e) {
    $("gp-out").textContent = String(e);
  }
}

await init();
$("ov-run").onclick = runOverlap;
$("st-run").onclick = runStripes;
$("gp-canvas").onclick = onGpClick;
runOverlap();
drawGp();
