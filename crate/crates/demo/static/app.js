// Wires the page controls to the wasm exports. Build the wasm package into
// ./pkg first (see the repository README), then serve this directory.

import init, { decision_boundary, feature_ranking, accuracy_curve } from "./pkg/hpelm_demo.js";

const $ = (id) => document.getElementById(id);

function busy(button, on) {
  button.disabled = on;
}

// blue (benign side) .. white .. red (malware side)
function marginColor(m, scale) {
  const t = Math.max(-1, Math.min(1, m / scale));
  const lift = (c) => Math.round(255 - Math.abs(t) * (255 - c));
  return t >= 0 ? [255, lift(96), lift(96)] : [lift(96), lift(128), 255];
}

function drawDecisionField(canvas, field) {
  const ctx = canvas.getContext("2d");
  const { cols, rows, margin, points, x0, x1, y0, y1 } = field;

  const scale = margin.reduce((a, m) => Math.max(a, Math.abs(m)), 1e-9);
  const img = ctx.createImageData(cols, rows);
  for (let i = 0; i < margin.length; i++) {
    const [r, g, b] = marginColor(margin[i], scale);
    img.data[4 * i] = r;
    img.data[4 * i + 1] = g;
    img.data[4 * i + 2] = b;
    img.data[4 * i + 3] = 255;
  }
  // raster -> canvas via an offscreen buffer so the field scales smoothly
  const buf = document.createElement("canvas");
  buf.width = cols;
  buf.height = rows;
  buf.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = true;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(buf, 0, 0, canvas.width, canvas.height);

  const px = (x) => ((x - x0) / (x1 - x0)) * canvas.width;
  const py = (y) => ((y1 - y) / (y1 - y0)) * canvas.height;
  for (const p of points) {
    ctx.beginPath();
    ctx.arc(px(p.x), py(p.y), p.split === "train" ? 2.5 : 3.5, 0, 2 * Math.PI);
    ctx.fillStyle = p.label === "malware" ? "#b3172b" : "#1d4ed8";
    ctx.strokeStyle = p.split === "train" ? "rgba(255,255,255,.8)" : "#111";
    ctx.lineWidth = 1;
    ctx.fill();
    ctx.stroke();
  }
}

function axes(ctx, w, h, pad) {
  ctx.strokeStyle = "#d8dee8";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad / 2, h - pad);
  ctx.stroke();
}

function drawCurve(canvas, curve) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  axes(ctx, w, h, pad);

  const xs = curve.neurons;
  const xpos = (i) => pad + (i / (xs.length - 1)) * (w - 1.5 * pad);
  const ypos = (a) => (h - pad) - Math.max(0, Math.min(1, (a - 0.4) / 0.6)) * (h - 1.5 * pad);

  ctx.fillStyle = "#6b7687";
  ctx.font = "11px system-ui";
  for (let i = 0; i < xs.length; i++) ctx.fillText(String(xs[i]), xpos(i) - 8, h - pad + 14);
  for (const a of [0.5, 0.75, 1.0]) ctx.fillText(a.toFixed(2), 6, ypos(a) + 4);

  const series = [
    ["train_accuracy", "#8aa1c4"],
    ["test_accuracy", "#b3172b"],
  ];
  for (const [key, color] of series) {
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    curve[key].forEach((a, i) => (i === 0 ? ctx.moveTo(xpos(i), ypos(a)) : ctx.lineTo(xpos(i), ypos(a))));
    ctx.stroke();
    curve[key].forEach((a, i) => {
      ctx.beginPath();
      ctx.arc(xpos(i), ypos(a), 3, 0, 2 * Math.PI);
      ctx.fillStyle = color;
      ctx.fill();
    });
  }
  ctx.fillStyle = "#8aa1c4";
  ctx.fillText("train", w - pad - 60, pad / 2 + 10);
  ctx.fillStyle = "#b3172b";
  ctx.fillText("test", w - pad - 20, pad / 2 + 10);
}

function drawRanking(canvas, report) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);

  const d = report.names.length;
  const logs = report.f_scores.map((s) => Math.log10(1 + s));
  const flogs = report.fisher_scores.map((s) => Math.log10(1 + s));
  const top = Math.max(...logs, ...flogs, 1e-9);
  const band = (w - 1.5 * pad) / d;
  const bw = Math.max(4, band / 2 - 6);

  for (let j = 0; j < d; j++) {
    const x = pad + j * band;
    const hf = (logs[j] / top) * (h - 2 * pad);
    const hg = (flogs[j] / top) * (h - 2 * pad);
    ctx.fillStyle = j === report.signal_index ? "#b3172b" : "#8aa1c4";
    ctx.fillRect(x, h - pad - hf, bw, hf);
    ctx.fillStyle = j === report.signal_index ? "#e08090" : "#c5d2e6";
    ctx.fillRect(x + bw + 2, h - pad - hg, bw, hg);
    ctx.fillStyle = "#6b7687";
    ctx.font = "11px system-ui";
    ctx.save();
    ctx.translate(x + bw, h - pad + 12);
    ctx.fillText(report.names[j], -ctx.measureText(report.names[j]).width / 2, 0);
    ctx.restore();
  }
  ctx.fillStyle = "#6b7687";
  ctx.fillText("dark = F-score, light = Fisher (log scale)", pad, 14);
}

async function main() {
  await init();

  const dbBtn = $("db-run");
  const runBoundary = () => {
    busy(dbBtn, true);
    $("db-err").textContent = "";
    try {
      const json = decision_boundary(
        $("db-kind").value,
        $("db-combo").value,
        Number($("db-n").value),
        BigInt($("db-seed").value),
        $("db-ridge").value,
        96,
      );
      const field = JSON.parse(json);
      drawDecisionField($("db-canvas"), field);
      $("db-stats").textContent =
        `train accuracy ${field.train_accuracy.toFixed(4)}   ` +
        `test accuracy ${field.test_accuracy.toFixed(4)}   ` +
        `train residual ${field.train_residual.toExponential(2)}\n` +
        `red = ${field.classes[1]} side, blue = ${field.classes[0]} side; ` +
        `small dots are training points, outlined dots are test points`;
    } catch (e) {
      $("db-err").textContent = String(e);
    } finally {
      busy(dbBtn, false);
    }
  };

  const acBtn = $("ac-run");
  const runCurve = () => {
    busy(acBtn, true);
    $("ac-err").textContent = "";
    try {
      const json = accuracy_curve(
        $("ac-kind").value,
        $("ac-act").value,
        400,
        BigInt($("ac-seed").value),
      );
      const curve = JSON.parse(json);
      drawCurve($("ac-canvas"), curve);
      const last = curve.test_accuracy[curve.test_accuracy.length - 1];
      $("ac-stats").textContent = `test accuracy at L=160: ${last.toFixed(4)}`;
    } catch (e) {
      $("ac-err").textContent = String(e);
    } finally {
      busy(acBtn, false);
    }
  };

  const frBtn = $("fr-run");
  const runRanking = () => {
    busy(frBtn, true);
    $("fr-err").textContent = "";
    try {
      const json = feature_ranking(300, Number($("fr-d").value), BigInt($("fr-seed").value));
      const report = JSON.parse(json);
      drawRanking($("fr-canvas"), report);
      $("fr-stats").textContent =
        `planted signal column: ${report.names[report.signal_index]}   ` +
        `F-score top pick: ${report.names[report.f_order[0]]}   ` +
        `Fisher top pick: ${report.names[report.fisher_order[0]]}`;
    } catch (e) {
      $("fr-err").textContent = String(e);
    } finally {
      busy(frBtn, false);
    }
  };

  dbBtn.addEventListener("click", runBoundary);
  acBtn.addEventListener("click", runCurve);
  frBtn.addEventListener("click", runRanking);
  runBoundary();
  runCurve();
  runRanking();
}

main().catch((e) => {
  document.body.insertAdjacentHTML(
    "beforeend",
    `<p class="err">failed to load the wasm module: ${e}</p>`,
  );
});
