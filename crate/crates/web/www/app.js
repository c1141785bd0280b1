import init, {
  ccdf_analytic_curve,
  ccdf_simulated_curve,
  ambiguity_surface,
  ambiguity_axes,
  psd_curve,
} from "./pkg/ddfmcw_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const range = (a, b, n) => Float64Array.from({ length: n }, (_, i) => a + ((b - a) * i) / (n - 1));

function axes(ctx, box, xr, yr, xlabel, ylabel, ylog) {
  const { width: w, height: h } = ctx.canvas;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(box.l, box.t, w - box.l - box.r, h - box.t - box.b);
  ctx.fillStyle = "#333";
  ctx.font = "12px system-ui";
  const sx = (x) => box.l + ((x - xr[0]) / (xr[1] - xr[0])) * (w - box.l - box.r);
  const sy = (y) => h - box.b - ((y - yr[0]) / (yr[1] - yr[0])) * (h - box.t - box.b);
  for (let i = 0; i <= 5; i++) {
    const x = xr[0] + ((xr[1] - xr[0]) * i) / 5;
    ctx.fillText(x.toFixed(2), sx(x) - 12, h - box.b + 16);
    const y = yr[0] + ((yr[1] - yr[0]) * i) / 5;
    ctx.fillText(ylog ? `1e${y.toFixed(1)}` : y.toFixed(0), 4, sy(y) + 4);
  }
  ctx.fillText(xlabel, w / 2 - 20, h - 4);
  ctx.save();
  ctx.translate(12, h / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(ylabel, -20, 0);
  ctx.restore();
  return { sx, sy };
}

function line(ctx, s, xs, ys, color, dash = []) {
  ctx.strokeStyle = color;
  ctx.setLineDash(dash);
  ctx.beginPath();
  let pen = false;
  xs.forEach((x, i) => {
    if (!Number.isFinite(ys[i])) { pen = false; return; }
    pen ? ctx.lineTo(s.sx(x), s.sy(ys[i])) : ctx.moveTo(s.sx(x), s.sy(ys[i]));
    pen = true;
  });
  ctx.stroke();
  ctx.setLineDash([]);
}

// Defer heavy work so the status text paints first.
function run(statusId, job) {
  $(statusId).textContent = "computing…";
  setTimeout(() => {
    const t0 = performance.now();
    try {
      job();
      $(statusId).textContent = `${(performance.now() - t0).toFixed(0)} ms`;
    } catch (e) {
      $(statusId).textContent = `error: ${e.message ?? e}`;
    }
  }, 10);
}

function drawCcdf() {
  const rho = num("ccdf-rho"), m = num("ccdf-m"), n = num("ccdf-n"), trials = num("ccdf-trials");
  const g = range(2, 14, 121);
  const log = (v) => Array.from(v, (p) => (p > 0 ? Math.log10(p) : NaN));
  const fm = log(ccdf_simulated_curve("fmcw", rho, m, n, trials, 1n, g));
  const dd = log(ccdf_simulated_curve("ddip", rho, m, n, trials, 1n, g));
  const an = log(ccdf_analytic_curve(rho, m, n, g));
  const ctx = $("ccdf-plot").getContext("2d");
  const s = axes(ctx, { l: 50, r: 10, t: 10, b: 30 }, [2, 14], [-4, 0], "γ0 (dB)", "P(PAPR > γ0)", true);
  line(ctx, s, g, fm, "#c0392b");
  line(ctx, s, g, dd, "#2471a3");
  line(ctx, s, g, an, "#555", [6, 4]);
}

function colour(v) {
  // -60 dB .. 0 dB onto a dark-to-bright ramp
  const t = Math.min(1, Math.max(0, (v + 60) / 60));
  return [Math.round(255 * Math.min(1, 1.6 * t)), Math.round(255 * t * t), Math.round(90 * (1 - t) + 40 * t)];
}

function drawAmbiguity() {
  const m = num("amb-m"), n = num("amb-n"), to = num("amb-to"), no = num("amb-no");
  const ax = ambiguity_axes(m, n, to, no);
  const nt = ax[0], nn = ax[1];
  const taus = ax.subarray(2, 2 + nt), nus = ax.subarray(2 + nt);
  const z = ambiguity_surface(m, n, to, no);
  const cv = $("amb-plot"), ctx = cv.getContext("2d");
  const box = { l: 50, r: 10, t: 10, b: 30 };
  const s = axes(ctx, box, [taus[0], taus[nt - 1]], [nus[0], nus[nn - 1]], "τ (delay bins)", "ν (Doppler bins)", false);
  const pw = (cv.width - box.l - box.r) / nt, ph = (cv.height - box.t - box.b) / nn;
  for (let i = 0; i < nt; i++) {
    for (let j = 0; j < nn; j++) {
      const [r, gg, b] = colour(z[i * nn + j]);
      ctx.fillStyle = `rgb(${r},${gg},${b})`;
      ctx.fillRect(s.sx(taus[i]) - pw / 2, s.sy(nus[j]) - ph / 2, pw + 1, ph + 1);
    }
  }
}

function drawPsd() {
  const rho = num("psd-rho"), m = num("psd-m"), n = num("psd-n");
  const f = range(-0.8, 0.8, 1601);
  const fm = psd_curve("fmcw", rho, m, n, f);
  const dd = psd_curve("ddip", rho, m, n, f);
  const top = Math.ceil(Math.max(...fm, ...dd) / 10) * 10;
  const ctx = $("psd-plot").getContext("2d");
  const s = axes(ctx, { l: 50, r: 10, t: 10, b: 30 }, [-0.8, 0.8], [top - 80, top], "f (M/T)", "PSD (dB)", false);
  const clip = (v) => Array.from(v, (x) => (x < top - 80 ? top - 80 : x));
  line(ctx, s, f, clip(dd), "#2471a3");
  line(ctx, s, f, clip(fm), "#c0392b");
}

await init();
$("ccdf-run").onclick = () => run("ccdf-status", drawCcdf);
$("amb-run").onclick = () => run("amb-status", drawAmbiguity);
$("psd-run").onclick = () => run("psd-status", drawPsd);
run("ccdf-status", drawCcdf);
run("amb-status", drawAmbiguity);
run("psd-status", drawPsd);
