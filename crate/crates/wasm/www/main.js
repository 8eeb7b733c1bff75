import init, { presets, preset_defaults, solve, study } from "./pkg/ocfem_wasm.js";

const $ = (id) => document.getElementById(id);
const canvas = $("plot");
const ctx = canvas.getContext("2d");
let view = null;

function status(text) {
  $("status").textContent = text;
}

function fieldName() {
  return document.querySelector("input[name=field]:checked").value;
}

// blue, white, red
function color(t) {
  const s = Math.max(0, Math.min(1, t));
  const [from, to, k] = s < 0.5 ? [[59, 76, 192], [247, 247, 247], 2 * s] : [[247, 247, 247], [180, 4, 38], 2 * s - 1];
  const c = from.map((v, i) => Math.round(v + (to[i] - v) * k));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

function range(values) {
  let lo = Infinity, hi = -Infinity;
  for (const v of values) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  return hi > lo ? [lo, hi] : [lo - 1e-12, hi + 1e-12];
}

function draw() {
  if (!view) return;
  const name = fieldName();
  const values = view[name];
  const perTriangle = name === "control";
  const [lo, hi] = range(values);
  const xy = view.vertices, tri = view.triangles, W = canvas.width, H = canvas.height;
  const px = (i) => [xy[2 * i] * W, (1 - xy[2 * i + 1]) * H];
  ctx.clearRect(0, 0, W, H);
  for (let t = 0; t < tri.length / 3; t++) {
    const ids = [tri[3 * t], tri[3 * t + 1], tri[3 * t + 2]];
    const v = perTriangle ? values[t] : (values[ids[0]] + values[ids[1]] + values[ids[2]]) / 3;
    ctx.fillStyle = color((v - lo) / (hi - lo));
    ctx.strokeStyle = ctx.fillStyle;
    ctx.beginPath();
    ids.map(px).forEach(([x, y], k) => (k ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
    ctx.closePath();
    ctx.fill();
    ctx.stroke();
  }
  $("min").textContent = lo.toExponential(3);
  $("max").textContent = hi.toExponential(3);
}

// Value of the shown field at a point: the triangle is found by barycentric test.
function probe(x, y) {
  const xy = view.vertices, tri = view.triangles, name = fieldName(), values = view[name];
  for (let t = 0; t < tri.length / 3; t++) {
    const [a, b, c] = [tri[3 * t], tri[3 * t + 1], tri[3 * t + 2]];
    const ax = xy[2 * a], ay = xy[2 * a + 1];
    const det = (xy[2 * b] - ax) * (xy[2 * c + 1] - ay) - (xy[2 * c] - ax) * (xy[2 * b + 1] - ay);
    const l1 = ((x - ax) * (xy[2 * c + 1] - ay) - (xy[2 * c] - ax) * (y - ay)) / det;
    const l2 = ((xy[2 * b] - ax) * (y - ay) - (x - ax) * (xy[2 * b + 1] - ay)) / det;
    const l0 = 1 - l1 - l2;
    if (l0 >= -1e-12 && l1 >= -1e-12 && l2 >= -1e-12) {
      return name === "control" ? values[t] : l0 * values[a] + l1 * values[b] + l2 * values[c];
    }
  }
  return NaN;
}

function loadDefaults() {
  const [nu, lower, upper] = preset_defaults($("preset").value);
  $("nu").value = nu;
  $("lower").value = lower;
  $("upper").value = upper;
}

function runSolve() {
  const args = [$("preset").value, Number($("level").value), Number($("nu").value), Number($("lower").value), Number($("upper").value)];
  status("solving...");
  setTimeout(() => {
    const t0 = performance.now();
    try {
      view?.free();
      const v = solve(...args);
      view = {
        vertices: v.vertices, triangles: v.triangles, control: v.control, state: v.state,
        adjoint: v.adjoint, postprocessed: v.postprocessed, free: () => v.free(),
      };
      $("summary").textContent =
        `cost          ${v.cost.toPrecision(10)}\nKKT residual  ${v.kkt_residual.toExponential(2)}\n` +
        `iterations    ${v.outer_iterations}\ntriangles     ${v.control.length}`;
      status(`solved in ${(performance.now() - t0).toFixed(0)} ms`);
      draw();
    } catch (e) {
      status(String(e));
    }
  }, 10);
}

function runStudy() {
  status("running study...");
  setTimeout(() => {
    try {
      const csv = study($("preset").value, Number($("jmin").value), Number($("jmax").value));
      const rows = csv.trim().split("\n").map((l) => l.split(","));
      const cell = (tag, s) => `<${tag}>${s}</${tag}>`;
      $("table").innerHTML = "<table>" +
        rows.map((r, i) => "<tr>" + r.map((s) => cell(i ? "td" : "th", i && s.includes("e") ? Number(s).toExponential(2) : s)).join("") + "</tr>").join("") +
        "</table>";
      status("study done");
    } catch (e) {
      status(String(e));
    }
  }, 10);
}

await init();
for (const name of presets()) {
  $("preset").add(new Option(name, name));
}
loadDefaults();
$("preset").addEventListener("change", loadDefaults);
$("solve").addEventListener("click", runSolve);
$("study").addEventListener("click", runStudy);
document.querySelectorAll("input[name=field]").forEach((r) => r.addEventListener("change", draw));
canvas.addEventListener("mousemove", (ev) => {
  if (!view) return;
  const rect = canvas.getBoundingClientRect();
  const x = (ev.clientX - rect.left) / rect.width, y = 1 - (ev.clientY - rect.top) / rect.height;
  $("probe").textContent = `(${x.toFixed(3)}, ${y.toFixed(3)}): ${probe(x, y).toExponential(4)}`;
});
runSolve();
