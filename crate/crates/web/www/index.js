import init, { example_input, explore, beta_curve, recency_curve } from "./pkg/reptrace_web.js";

const $ = (id) => document.getElementById(id);
let input;

function cell(tag, text) {
  const el = document.createElement(tag);
  el.textContent = text;
  return el;
}

function numberInput(value, onChange) {
  const el = document.createElement("input");
  el.type = "number";
  el.step = "0.05";
  el.min = "0";
  el.max = "1";
  el.value = value;
  el.addEventListener("input", () => {
    const v = parseFloat(el.value);
    if (!Number.isNaN(v)) {
      onChange(v);
      update();
    }
  });
  return el;
}

function buildTable() {
  const table = $("values");
  table.replaceChildren();
  const head = document.createElement("tr");
  head.append(cell("th", "provider"));
  for (const source of ["interaction", "witness"]) {
    for (const t of input.terms) head.append(cell("th", `${source} ${t.name}`));
  }
  table.append(head);
  const weights = document.createElement("tr");
  weights.append(cell("th", "term weight"));
  input.terms.forEach((t) => {
    const td = document.createElement("td");
    td.append(numberInput(t.weight, (v) => { t.weight = v; }));
    weights.append(td);
  });
  table.append(weights);
  for (const p of input.providers) {
    const row = document.createElement("tr");
    row.append(cell("th", p.id));
    for (const source of ["interaction", "witness"]) {
      p[source].forEach((v, i) => {
        const td = document.createElement("td");
        td.append(numberInput(v, (nv) => { p[source][i] = nv; }));
        row.append(td);
      });
    }
    table.append(row);
  }

  for (const [id, chosen] of [["preferred", input.preferred], ["other", input.other]]) {
    const sel = $(id);
    sel.replaceChildren(...input.providers.map((p) => new Option(p.id, p.id, false, p.id === chosen)));
  }
  $("wi").value = input.interaction_weight;
  $("ww").value = input.witness_weight;
  $("order").value = input.pros_order;
}

function update() {
  const out = JSON.parse(explore(JSON.stringify(input)));
  const ranking = $("ranking");
  ranking.replaceChildren();
  if (out.error) {
    $("text").innerHTML = "";
    $("text").append(cell("span", out.error));
    $("text").firstChild.className = "error";
    $("args").textContent = "";
    return;
  }
  const head = document.createElement("tr");
  head.append(cell("th", "rank"), cell("th", "provider"));
  input.terms.forEach((t) => head.append(cell("th", t.name)));
  head.append(cell("th", "score"));
  ranking.append(head);
  out.ranking.forEach((r, i) => {
    const row = document.createElement("tr");
    row.append(cell("td", i + 1), cell("th", r.id));
    r.terms.forEach((v) => row.append(cell("td", v.toFixed(2))));
    row.append(cell("td", r.overall.toFixed(3)));
    ranking.append(row);
  });
  const c = out.comparison;
  const text = $("text");
  text.replaceChildren();
  if (c.error) {
    text.append(cell("span", c.error));
    text.firstChild.className = "error";
    $("args").textContent = "";
  } else {
    if (c.swapped) text.append(cell("em", `${c.other} scores lower, so the pair is explained the other way round.\n`));
    text.append(c.text);
    $("args").textContent = JSON.stringify(c.arguments, null, 2);
  }
}

function plot(canvas, series, { ymax, band } = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 30;
  ctx.clearRect(0, 0, w, h);
  const xs = series.flatMap((s) => s.points.map((p) => p[0]));
  const xmax = Math.max(...xs);
  const top = ymax ?? Math.max(1e-9, ...series.flatMap((s) => s.points.map((p) => p[1] ?? 0)));
  const sx = (x) => pad + (x / xmax) * (w - 2 * pad);
  const sy = (y) => h - pad - (Math.min(y, top) / top) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
  ctx.fillStyle = "#555";
  ctx.font = "11px system-ui";
  ctx.fillText("0", pad - 4, h - pad + 14);
  ctx.fillText(String(+xmax.toFixed(2)), w - pad - 10, h - pad + 14);
  for (const b of band ?? []) {
    ctx.fillStyle = b.color;
    ctx.fillRect(sx(b.from), pad, sx(b.to) - sx(b.from), h - 2 * pad);
  }
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    let pen = false;
    for (const [x, y] of s.points) {
      if (y === null) { pen = false; continue; }
      if (pen) ctx.lineTo(sx(x), sy(y)); else ctx.moveTo(sx(x), sy(y));
      pen = true;
    }
    ctx.stroke();
  }
  series.forEach((s, i) => {
    ctx.fillStyle = s.color;
    ctx.fillText(s.label, w - pad - 170, pad + 14 * (i + 1));
  });
}

function updateBeta() {
  const v = (id) => parseFloat($(id).value);
  for (const id of ["alpha", "beta", "eps", "rho"]) $(`${id}-v`).textContent = $(id).value;
  const out = JSON.parse(beta_curve(v("alpha"), v("beta"), v("eps"), v("rho"), 300));
  if (out.error) {
    $("beta-info").textContent = out.error;
    return;
  }
  const o = out.opinion, d = out.discounted;
  plot($("beta-plot"), [
    { label: "opinion", color: "#4a78b5", points: o.density },
    { label: "discounted", color: "#d08a2c", points: d.density },
  ], { band: [
    { from: o.interval[0], to: o.interval[1], color: "rgba(74,120,181,.15)" },
    { from: d.interval[0], to: d.interval[1], color: "rgba(208,138,44,.15)" },
  ] });
  const f = (x) => x.toFixed(3);
  $("beta-info").textContent =
    `opinion Beta(${f(o.alpha)}, ${f(o.beta)}): mean ${f(o.expected)}, confidence ${f(o.confidence)}. ` +
    `discounted Beta(${f(d.alpha)}, ${f(d.beta)}): mean ${f(d.expected)}, confidence ${f(d.confidence)}.`;
}

function updateRecency() {
  $("lambda-v").textContent = $("lambda").value;
  $("horizon-v").textContent = $("horizon").value;
  const out = JSON.parse(recency_curve(parseFloat($("lambda").value), parseFloat($("horizon").value), 200));
  if (out.error) {
    $("recency-info").textContent = out.error;
    return;
  }
  plot($("recency-plot"), [{ label: "weight", color: "#3a9a5b", points: out.curve }], { ymax: 1 });
  $("recency-info").textContent = `half-life ${out.half_life.toFixed(2)} rounds`;
}

function reset() {
  input = JSON.parse(example_input());
  buildTable();
  update();
}

await init();
reset();
$("reset").addEventListener("click", reset);
$("preferred").addEventListener("change", (e) => { input.preferred = e.target.value; update(); });
$("other").addEventListener("change", (e) => { input.other = e.target.value; update(); });
$("order").addEventListener("change", (e) => { input.pros_order = e.target.value; update(); });
$("wi").addEventListener("input", (e) => { input.interaction_weight = parseFloat(e.target.value) || 0; update(); });
$("ww").addEventListener("input", (e) => { input.witness_weight = parseFloat(e.target.value) || 0; update(); });
for (const id of ["alpha", "beta", "eps", "rho"]) $(id).addEventListener("input", updateBeta);
for (const id of ["lambda", "horizon"]) $(id).addEventListener("input", updateRecency);
updateBeta();
updateRecency();
