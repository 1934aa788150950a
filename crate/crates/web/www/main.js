import init, { WienerDemo, FokkerPlanckDemo, min_action_path } from "./pkg/stochlab_web.js";

const $ = (id) => document.getElementById(id);

// Draws polylines on a canvas with a shared bounding box.
function plot(canvas, series, box) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 30;
  ctx.clearRect(0, 0, w, h);
  let [x0, x1, y0, y1] = box ?? [Infinity, -Infinity, Infinity, -Infinity];
  if (!box) {
    for (const s of series) {
      for (let i = 0; i < s.x.length; i++) {
        x0 = Math.min(x0, s.x[i]); x1 = Math.max(x1, s.x[i]);
        y0 = Math.min(y0, s.y[i]); y1 = Math.max(y1, s.y[i]);
      }
    }
    const m = 0.05 * (y1 - y0 || 1);
    y0 -= m; y1 += m;
  }
  const sx = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);
  ctx.strokeStyle = "#bbb";
  ctx.lineWidth = 1;
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#777";
  ctx.font = "11px sans-serif";
  ctx.fillText(x0.toFixed(2), pad, h - 10);
  ctx.fillText(x1.toFixed(2), w - pad - 30, h - 10);
  ctx.fillText(y1.toFixed(2), 2, pad + 4);
  ctx.fillText(y0.toFixed(2), 2, h - pad);
  for (const s of series) {
    ctx.strokeStyle = s.color ?? "#1f5fa8";
    ctx.lineWidth = s.width ?? 1.5;
    ctx.setLineDash(s.dash ?? []);
    ctx.beginPath();
    for (let i = 0; i < s.x.length; i++) {
      const f = i === 0 ? ctx.moveTo : ctx.lineTo;
      f.call(ctx, sx(s.x[i]), sy(s.y[i]));
    }
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function wienerPanel() {
  let demo;
  let history = [];
  const draw = () => {
    const series = history.map((s, i) => ({
      ...s,
      color: i === history.length - 1 ? "#1f5fa8" : `rgba(120,120,120,${0.15 + 0.5 * i / history.length})`,
      width: i === history.length - 1 ? 1.5 : 1,
    }));
    plot($("w-canvas"), series);
    $("w-info").textContent = `level ${demo.level()}, ${demo.times().length} nodes`;
  };
  const reset = () => {
    demo?.free();
    demo = new WienerDemo(BigInt($("w-seed").value || 0), 8);
    history = [{ x: demo.times(), y: demo.values() }];
    draw();
  };
  $("w-new").onclick = reset;
  $("w-refine").onclick = () => {
    if (demo.refine()) {
      history.push({ x: demo.times(), y: demo.values() });
      draw();
    }
  };
  reset();
}

function fokkerPlanckPanel() {
  let demo;
  let running = false;
  const draw = () => {
    const x = demo.x();
    const rho = demo.density();
    const stat = demo.stationary();
    const top = Math.max(...stat, ...rho.slice(0));
    plot($("fp-canvas"), [
      { x, y: stat, color: "#c44", dash: [5, 4] },
      { x, y: rho },
    ], [-3, 3, 0, Math.min(top * 1.05, 3)]);
    $("fp-info").textContent = `t = ${demo.time().toFixed(1)}, L1 to stationary ${demo.l1_error().toExponential(2)}`;
  };
  const reset = () => {
    demo?.free();
    demo = new FokkerPlanckDemo(+$("fp-tilt").value, +$("fp-sigma").value, +$("fp-x0").value);
    draw();
  };
  const frame = () => {
    if (!running) return;
    demo.advance(0.1, 0.02);
    draw();
    if (demo.time() < 200 && demo.l1_error() > 1e-4) {
      requestAnimationFrame(frame);
    } else {
      running = false;
      $("fp-run").textContent = "run";
    }
  };
  for (const id of ["fp-tilt", "fp-sigma", "fp-x0"]) $(id).oninput = () => { running = false; $("fp-run").textContent = "run"; reset(); };
  $("fp-run").onclick = () => {
    running = !running;
    $("fp-run").textContent = running ? "pause" : "run";
    if (running) requestAnimationFrame(frame);
  };
  reset();
}

function actionPanel() {
  const update = () => {
    const tilt = +$("ma-tilt").value;
    const y = +$("ma-y").value;
    const T = +$("ma-t").value;
    try {
      const r = min_action_path(tilt, y, T, Math.round(100 * T));
      const t = r.times();
      plot($("ma-canvas"), [
        { x: [0, T], y: [y, y], color: "#aaa", dash: [3, 3], width: 1 },
        { x: t, y: r.values() },
      ]);
      const note = r.converged() ? "" : " (not converged)";
      $("ma-info").textContent = `action ${r.action().toFixed(4)}, barrier ${r.barrier().toFixed(4)}${note}`;
      r.free();
    } catch (e) {
      $("ma-info").textContent = String(e);
    }
  };
  for (const id of ["ma-tilt", "ma-y", "ma-t"]) $(id).oninput = update;
  update();
}

await init();
wienerPanel();
fokkerPlanckPanel();
actionPanel();
