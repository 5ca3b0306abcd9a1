import init, { spectrum, classical_value, ww_curve, random_norms, coplanar_bound } from "./pkg/bell_web.js";

const CHSH = [0.5, 0.5, 0.5, -0.5];
const $ = (id) => document.getElementById(id);

function updateChsh() {
  const angles = ["a0", "a1", "b0", "b1"].map((id) => {
    const v = parseFloat($(id).value);
    $(id + "v").textContent = v.toFixed(3);
    return v;
  });
  const mags = spectrum(2, 2, CHSH, angles);
  const norm = Math.max(...mags);
  $("chsh-out").textContent =
    `|mu| = ${mags.map((m) => m.toFixed(6)).join(", ")}   norm = ${norm.toFixed(6)}   ` +
    `classical = ${classical_value(2, 2, CHSH)}   Tsirelson = ${Math.SQRT2.toFixed(6)}`;
}

function axes(ctx, w, h) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(30, 10);
  ctx.lineTo(30, h - 20);
  ctx.lineTo(w - 10, h - 20);
  ctx.stroke();
}

function drawWw() {
  const n = parseInt($("ww-n").value, 10);
  const seed = parseInt($("ww-seed").value, 10) >>> 0;
  const samples = 720;
  const data = ww_curve(n, seed, samples);
  const lambda = data[0];
  const curve = data.slice(1);
  const top = Math.max(...curve, 1) * 1.05;
  const canvas = $("ww-canvas");
  const ctx = canvas.getContext("2d");
  const [w, h] = [canvas.width, canvas.height];
  axes(ctx, w, h);
  const x = (i) => 30 + ((w - 40) * i) / samples;
  const y = (v) => h - 20 - ((h - 30) * v) / top;
  ctx.strokeStyle = "#1f5fa8";
  ctx.beginPath();
  curve.forEach((v, i) => (i === 0 ? ctx.moveTo(x(i), y(v)) : ctx.lineTo(x(i), y(v))));
  ctx.stroke();
  ctx.strokeStyle = "#c33";
  ctx.setLineDash([4, 4]);
  ctx.beginPath();
  ctx.moveTo(30, y(13 * Math.sqrt(n)));
  ctx.lineTo(w - 10, y(13 * Math.sqrt(n)));
  ctx.stroke();
  ctx.setLineDash([]);
  $("ww-out").textContent =
    `|lambda_f| = |R(0)| = ${lambda.toFixed(6)}   max_t |R(t)| = ${Math.max(...curve).toFixed(6)}   ` +
    `13 sqrt(n) = ${(13 * Math.sqrt(n)).toFixed(3)}`;
}

function drawHistogram() {
  const n = parseInt($("h-n").value, 10);
  const r = parseInt($("h-r").value, 10);
  const trials = parseInt($("h-trials").value, 10);
  const norms = random_norms(n, r, trials, 7, 8);
  const bound = coplanar_bound(n, r);
  const mk = Math.pow(2, (n - 1) / 2);
  const hi = Math.max(mk, ...norms) * 1.1;
  const bins = 60;
  const counts = new Array(bins).fill(0);
  norms.forEach((v) => counts[Math.min(bins - 1, Math.floor((v / hi) * bins))]++);
  const canvas = $("h-canvas");
  const ctx = canvas.getContext("2d");
  const [w, h] = [canvas.width, canvas.height];
  axes(ctx, w, h);
  const peak = Math.max(...counts);
  const bw = (w - 40) / bins;
  ctx.fillStyle = "#1f5fa8";
  counts.forEach((c, i) => {
    const bh = ((h - 30) * c) / peak;
    ctx.fillRect(30 + i * bw, h - 20 - bh, bw - 1, bh);
  });
  ctx.fillStyle = "#c33";
  ctx.fillRect(30 + ((w - 40) * mk) / hi, 10, 2, h - 30);
  $("h-out").textContent =
    `max estimate ${Math.max(...norms).toFixed(4)}   MK value 2^((n-1)/2) = ${mk.toFixed(4)} (red)   ` +
    `9 sqrt(rn ln n) = ${bound.toFixed(3)}`;
}

await init();
["a0", "a1", "b0", "b1"].forEach((id) => $(id).addEventListener("input", updateChsh));
$("ww-go").addEventListener("click", drawWw);
$("h-go").addEventListener("click", drawHistogram);
updateChsh();
drawWw();
drawHistogram();
