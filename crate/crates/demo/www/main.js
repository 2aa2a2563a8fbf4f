import init, { simulate_se2, se3_observability, check_se2_sensor } from "./pkg/liegram_demo.js";

const num = (id) => Number(document.getElementById(id).value);
const colors = ["#1f77b4", "#d62728", "#2ca02c"];

function show(id, text, failed) {
  const el = document.getElementById(id);
  el.textContent = text;
  el.className = failed ? "out err" : "out";
}

function plot(curves) {
  const canvas = document.getElementById("se2-plot");
  const ctx = canvas.getContext("2d");
  const pad = 40;
  const w = canvas.width - 2 * pad;
  const h = canvas.height - 2 * pad;
  ctx.clearRect(0, 0, canvas.width, canvas.height);

  const all = curves.flatMap((c) => c.log_det_p);
  let lo = Math.min(...all);
  let hi = Math.max(...all);
  if (hi - lo < 1e-9) { lo -= 0.5; hi += 0.5; }
  const n = curves[0].log_det_p.length;
  const x = (t) => pad + (n > 1 ? (t / (n - 1)) * w : 0);
  const y = (v) => pad + ((hi - v) / (hi - lo)) * h;

  ctx.strokeStyle = "#000";
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, pad + h);
  ctx.lineTo(pad + w, pad + h);
  ctx.stroke();
  ctx.fillStyle = "#000";
  ctx.font = "12px sans-serif";
  ctx.fillText(hi.toFixed(2), 2, pad + 4);
  ctx.fillText(lo.toFixed(2), 2, pad + h);
  ctx.fillText("log det P", pad + 4, pad - 10);

  curves.forEach((c, k) => {
    ctx.strokeStyle = colors[k];
    ctx.beginPath();
    c.log_det_p.forEach((v, t) => (t ? ctx.lineTo(x(t), y(v)) : ctx.moveTo(x(t), y(v))));
    ctx.stroke();
    ctx.fillStyle = colors[k];
    ctx.fillText(c.name, pad + w - 60, pad + 14 * (k + 1));
  });
}

function runSe2() {
  try {
    const curves = JSON.parse(simulate_se2(num("speed"), num("yaw"), num("se2-horizon")));
    plot(curves);
    const lines = curves.map((c) => {
      const last = c.log_det_p.length - 1;
      return `${c.name}: first log det P ${c.log_det_p[0].toFixed(4)}, final ${c.log_det_p[last].toFixed(4)}, ` +
        `rank at t=0 ${c.rank[0]}, final rank ${c.rank[last]}`;
    });
    show("se2-out", lines.join("\n"));
  } catch (e) {
    show("se2-out", String(e), true);
  }
}

function runSe3() {
  try {
    const r = JSON.parse(se3_observability(num("se3-speed"), num("switch"), num("se3-horizon")));
    show("se3-out",
      `reachable so(3) dim for T = 1..${r.reachable.length}: ${r.reachable.join(" ")}\n` +
      `observability index: ${r.index ?? "none"}\n` +
      `unobservable directions at the horizon: ${r.unobservable_dim}`);
  } catch (e) {
    show("se3-out", String(e), true);
  }
}

function runDiv() {
  try {
    const r = JSON.parse(check_se2_sensor(num("h0"), num("h1"), num("h2"), num("div-horizon")));
    show("div-out",
      `${r.redundant ? "redundant" : "adds new directions"} (innovation dim ${r.innovation_dim}, ` +
      `norm ${r.innovation_norm.toExponential(3)}, threshold ${r.epsilon.toExponential(3)})`);
  } catch (e) {
    show("div-out", String(e), true);
  }
}

await init();
document.getElementById("run-se2").addEventListener("click", runSe2);
document.getElementById("run-se3").addEventListener("click", runSe3);
document.getElementById("run-div").addEventListener("click", runDiv);
runSe2();
runSe3();
runDiv();
