// Expects the wasm-bindgen output in ./pkg (see the README for the build command).
import init, { energy_profile, eigenvalues, spectral_kernel } from "./pkg/ado3d_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function medium() {
  return [num("mua"), num("mus"), num("g"), num("lmax"), num("n")];
}

function status(text, isError = false) {
  $("status").textContent = text;
  $("status").className = isError ? "error" : "";
}

// Runs a solver call after the status line has had a chance to repaint.
function guarded(label, work) {
  status(`${label}...`);
  setTimeout(() => {
    const t0 = performance.now();
    try {
      work();
      status(`${label}: ${(performance.now() - t0).toFixed(0)} ms`);
    } catch (e) {
      status(String(e.message ?? e), true);
    }
  }, 10);
}

function plot(xs, ys, xlabel, ylabel, logY) {
  const canvas = $("plot");
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 90;
  ctx.clearRect(0, 0, W, H);
  const ty = (v) => (logY ? Math.log10(v) : v);
  const pts = xs.map((x, k) => [x, ys[k]]).filter(([, y]) => Number.isFinite(y) && (!logY || y > 0));
  if (pts.length < 2) {
    status("nothing finite to plot", true);
    return;
  }
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const yv = pts.map(([, y]) => ty(y));
  let y0 = Math.min(...yv), y1 = Math.max(...yv);
  if (y1 === y0) y1 = y0 + 1;
  const sx = (x) => pad + ((x - x0) / (x1 - x0)) * (W - 2 * pad);
  const sy = (y) => H - pad - ((ty(y) - y0) / (y1 - y0)) * (H - 2 * pad);
  ctx.font = "26px system-ui";
  ctx.strokeStyle = "#999";
  ctx.lineWidth = 2;
  ctx.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.fillText(xlabel, W / 2 - 40, H - 25);
  ctx.fillText(ylabel, 10, pad - 30);
  for (let k = 0; k <= 4; k++) {
    const xv = x0 + ((x1 - x0) * k) / 4;
    ctx.fillText(xv.toPrecision(3), sx(xv) - 25, H - pad + 35);
    const yl = y0 + ((y1 - y0) * k) / 4;
    const label = logY ? `1e${yl.toFixed(1)}` : yl.toPrecision(3);
    ctx.fillText(label, 5, H - pad - ((yl - y0) / (y1 - y0)) * (H - 2 * pad));
  }
  ctx.strokeStyle = "#1565c0";
  ctx.lineWidth = 4;
  ctx.beginPath();
  let pen = false;
  xs.forEach((x, k) => {
    const y = ys[k];
    if (!Number.isFinite(y) || (logY && y <= 0)) {
      pen = false;
      return;
    }
    if (pen) ctx.lineTo(sx(x), sy(y));
    else ctx.moveTo(sx(x), sy(y));
    pen = true;
  });
  ctx.stroke();
}

function runProfile() {
  const nz = 60;
  const zmin = num("zmin"), zmax = num("zmax");
  guarded("depth profile", () => {
    const u = energy_profile($("engine").value, ...medium(), num("rho"), zmin, zmax, nz);
    const zs = Array.from({ length: nz }, (_, k) => zmin + ((zmax - zmin) * k) / (nz - 1));
    plot(zs, Array.from(u), "z (mm)", "u (1/mm^2), log scale", true);
    $("table").textContent = "";
  });
}

function runKernel() {
  const nq = 400;
  const qmax = num("qmax");
  guarded("spectral kernel", () => {
    const f = spectral_kernel($("kind").value, ...medium(), num("zk"), qmax, nq);
    const qs = Array.from({ length: nq }, (_, k) => (qmax * k) / (nq - 1));
    plot(qs, Array.from(f), "q (units of mu_t)", "F(q, z)", false);
    $("table").textContent = "";
  });
}

function runEigen() {
  guarded("eigenvalues", () => {
    const nu = Array.from(eigenvalues(...medium(), num("m")));
    const rows = nu.map((v, k) => `<tr><td>${k + 1}</td><td>${v.toPrecision(12)}</td></tr>`).join("");
    $("table").innerHTML = `<table><tr><th>n</th><th>&nu;<sub>n</sub></th></tr>${rows}</table>`;
  });
}

init().then(() => {
  $("run-profile").onclick = runProfile;
  $("run-kernel").onclick = runKernel;
  $("run-eigen").onclick = runEigen;
  status("ready");
  runProfile();
}, (e) => status(`could not load the wasm module: ${e}`, true));
