import init, { SwarmDemo, CoverageDemo, FusionDemo } from "./pkg/handswarm_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

await init();

// swarm

let swarm = new SwarmDemo(9, 1);
const sc = document.getElementById("swarm").getContext("2d");
const swarmStatus = document.getElementById("swarm-status");
let groupCount = 1;

function drawSwarm() {
  const p = swarm.positions();
  const g = swarm.groups();
  let cx = 0, cy = 0;
  const n = p.length / 3;
  for (let i = 0; i < n; i++) { cx += p[3 * i]; cy += p[3 * i + 1]; }
  cx /= n; cy /= n;
  const scale = 6;
  sc.clearRect(0, 0, 420, 420);
  for (let i = 0; i < n; i++) {
    sc.fillStyle = COLORS[g[i] % COLORS.length];
    sc.beginPath();
    sc.arc(210 + (p[3 * i] - cx) * scale, 210 - (p[3 * i + 1] - cy) * scale, 5, 0, 2 * Math.PI);
    sc.fill();
  }
  swarmStatus.textContent = JSON.stringify(JSON.parse(swarm.status()), null, 1);
}

function swarmFrame() {
  swarm.step(2);
  drawSwarm();
  requestAnimationFrame(swarmFrame);
}

for (const b of document.querySelectorAll("button[data-shape]")) {
  b.onclick = () => swarm.set_formation(b.dataset.shape);
}
document.getElementById("split").onclick = () => {
  swarm.command("switch_mode", '{"mode":"Formation"}');
  swarm.command("split", '{"k":2}');
  groupCount = 2;
};
document.getElementById("merge").onclick = () => {
  swarm.command("switch_mode", '{"mode":"Formation"}');
  swarm.command("merge", JSON.stringify({ groups: [...Array(groupCount).keys()].map((k) => k + 1) }));
  groupCount = 1;
};
document.getElementById("estop").onclick = () => swarm.emergency_stop();
document.getElementById("reset").onclick = () => { swarm.free(); swarm = new SwarmDemo(9, 1); groupCount = 1; };
requestAnimationFrame(swarmFrame);

// coverage

const HALF = 50;
let cov = new CoverageDemo(12, HALF, 1);
let seed = 1;
const cc = document.getElementById("coverage").getContext("2d");
const covStatus = document.getElementById("coverage-status");
const toPx = (x, y) => [(x + HALF) * 4.2, (HALF - y) * 4.2];
const fromPx = (px, py) => [px / 4.2 - HALF, HALF - py / 4.2];

function drawCoverage() {
  cc.clearRect(0, 0, 420, 420);
  const cells = JSON.parse(cov.cells());
  cc.strokeStyle = "#888";
  for (const cell of cells) {
    cc.beginPath();
    cell.forEach(([x, y], i) => (i ? cc.lineTo : cc.moveTo).call(cc, ...toPx(x, y)));
    cc.closePath();
    cc.stroke();
  }
  const s = cov.sites();
  cc.fillStyle = "#d62728";
  for (let i = 0; i < s.length; i += 2) {
    const [x, y] = toPx(s[i], s[i + 1]);
    cc.fillRect(x - 3, y - 3, 6, 6);
  }
  covStatus.textContent = `iterations ${cov.iterations()}\ncost ${cov.cost().toFixed(1)}`;
}

document.getElementById("lloyd").onclick = () => { cov.step(); drawCoverage(); };
document.getElementById("lloyd-run").onclick = () => {
  const tick = () => {
    const moved = cov.step();
    drawCoverage();
    if (moved > 1e-3 && cov.iterations() < 500) setTimeout(tick, 30);
  };
  tick();
};
document.getElementById("scatter").onclick = () => { cov.free(); cov = new CoverageDemo(12, HALF, ++seed); drawCoverage(); };

let dragging = -1;
const canvas = document.getElementById("coverage");
canvas.onmousedown = (e) => {
  const [x, y] = fromPx(e.offsetX, e.offsetY);
  const s = cov.sites();
  let best = 3;
  dragging = -1;
  for (let i = 0; i < s.length; i += 2) {
    const d = Math.hypot(s[i] - x, s[i + 1] - y);
    if (d < best) { best = d; dragging = i / 2; }
  }
};
canvas.onmousemove = (e) => {
  if (dragging < 0) return;
  cov.move_site(dragging, ...fromPx(e.offsetX, e.offsetY));
  drawCoverage();
};
window.addEventListener("mouseup", () => (dragging = -1));
drawCoverage();

// fusion

const fusion = new FusionDemo();
const conf = document.getElementById("conf");
const fusionStatus = document.getElementById("fusion-status");
const decisions = [];
conf.oninput = () => (document.getElementById("conf-v").textContent = conf.value);

function push(times) {
  let last;
  for (let i = 0; i < times; i++) {
    last = JSON.parse(fusion.push(document.getElementById("label").value, Number(conf.value)));
    if (last.decision) decisions.push(`frame ${last.frame}: ${last.decision.label} (score ${last.decision.score}/20)`);
  }
  fusionStatus.textContent =
    `frame ${last.frame}: ${last.outcome}\n` +
    `buffer (${last.buffer.length}/20): ${last.buffer.join(" ")}\n` +
    `blank frames left: ${last.blank_frames_left}\n\ndecisions:\n` + decisions.join("\n");
}
document.getElementById("push1").onclick = () => push(1);
document.getElementById("push10").onclick = () => push(10);
