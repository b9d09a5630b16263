import init, { clusterDemo, dependenceSweep, warningDemo } from "../pkg/ckc_wasm.js";

const num = (id) => Number(document.getElementById(id).value);

function guard(outId, fn) {
  const out = document.getElementById(outId);
  try {
    out.classList.remove("err");
    fn(out);
  } catch (e) {
    out.textContent = String(e);
    out.classList.add("err");
  }
}

// Diverging blue-white-red scale over [-1, 1].
function colour(v) {
  const t = Math.max(-1, Math.min(1, v));
  const a = Math.round(255 * (1 - Math.abs(t)));
  return t >= 0 ? `rgb(255,${a},${a})` : `rgb(${a},${a},255)`;
}

function drawKernel(canvas, kernel) {
  const ctx = canvas.getContext("2d");
  const n = kernel.length;
  const cell = canvas.width / n;
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      ctx.fillStyle = colour(kernel[i][j]);
      ctx.fillRect(j * cell, i * cell, Math.ceil(cell), Math.ceil(cell));
    }
  }
}

function runCluster() {
  guard("c-out", (out) => {
    const r = JSON.parse(clusterDemo(num("c-n"), num("c-m"), num("c-seed"), num("c-nu")));
    out.textContent =
      `ARI ${r.ari.toFixed(3)} (raw-feature k-means ${r.raw_ari.toFixed(3)}); ` +
      `mean kappa within ${r.within.toFixed(3)}, across ${r.cross.toFixed(3)}`;
    drawKernel(document.getElementById("c-canvas"), r.kernel);
  });
}

function runSweep() {
  const table = document.getElementById("d-table");
  const levels = [0.1, 0.25, 0.5, 1, 2, 4, 8];
  try {
    const rows = JSON.parse(dependenceSweep(num("d-n"), num("d-seed"), 0.05, new Float64Array(levels)));
    table.innerHTML =
      "<tr><th>&sigma;</th><th>aggregate</th><th>verdict</th></tr>" +
      rows
        .map((r) => `<tr><td>${r.noise}</td><td>${r.aggregate.toExponential(3)}</td>` +
          `<td>${r.dependent ? "dependent" : "independent"}</td></tr>`)
        .join("");
  } catch (e) {
    table.innerHTML = `<tr><td class="err">${e}</td></tr>`;
  }
}

function drawYears(canvas, demo) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const mid = canvas.height / 2;
  const scale = mid / 3;
  const w = canvas.width / demo.years.length;
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(0, mid);
  ctx.lineTo(canvas.width, mid);
  ctx.stroke();
  demo.years.forEach((y, i) => {
    const h = Math.max(-3, Math.min(3, y.yc_z)) * scale;
    ctx.fillStyle = y.year === demo.event_year ? "#d62728" : y.warned ? "#ff7f0e" : "#1f77b4";
    ctx.fillRect(i * w + 4, h >= 0 ? mid - h : mid, w - 8, Math.abs(h));
    ctx.fillStyle = "#000";
    ctx.fillText(String(y.year), i * w + 4, canvas.height - 4);
  });
}

function runWarning() {
  guard("w-out", (out) => {
    out.textContent = "running...";
    const r = JSON.parse(warningDemo(num("w-seed"), num("w-years"), num("w-offset")));
    const warned = r.years.filter((y) => y.warned).map((y) => y.year);
    out.textContent = `event year ${r.event_year}; warnings for ${warned.join(", ") || "none"} (red: event, orange: warned)`;
    drawYears(document.getElementById("w-canvas"), r);
  });
}

await init();
document.getElementById("c-run").addEventListener("click", runCluster);
document.getElementById("d-run").addEventListener("click", runSweep);
document.getElementById("w-run").addEventListener("click", runWarning);
runCluster();
runSweep();
