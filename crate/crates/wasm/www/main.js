import init, { spectrum_demo, bound_curves, sgd_vs_ridge_demo } from "./pkg/srl_wasm.js";

const fmt = (v) => (Math.abs(v) >= 1e-3 && Math.abs(v) < 1e4 ? v.toFixed(4) : v.toExponential(3));

function values(form) {
  const data = new FormData(form);
  return Object.fromEntries([...data.entries()].map(([k, v]) => [k, isNaN(Number(v)) ? v : Number(v)]));
}

function wire(id, run) {
  const form = document.getElementById(`${id}-form`);
  const out = document.getElementById(`${id}-out`);
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    out.textContent = "working...";
    // Let the browser paint before the synchronous computation starts.
    setTimeout(() => {
      try {
        out.innerHTML = run(values(form));
      } catch (e) {
        out.innerHTML = `<p class="err">${e}</p>`;
      }
    }, 10);
  });
}

function table(head, rows) {
  const th = head.map((h) => `<th>${h}</th>`).join("");
  const body = rows.map((r) => `<tr>${r.map((c) => `<td>${c}</td>`).join("")}</tr>`).join("");
  return `<table><tr>${th}</tr>${body}</table>`;
}

await init();
document.getElementById("status").textContent = "Ready.";

wire("spectrum", (v) => {
  const r = JSON.parse(spectrum_demo(v.n, v.m, v.degree, BigInt(v.seed)));
  return `${r.svg}<p>fitted β: preferential attachment ${fmt(r.beta_ba)}, regular ${fmt(r.beta_regular)}</p>`;
});

wire("bounds", (v) => {
  const r = JSON.parse(bound_curves(v.d, v.beta, v.sigma, v.gamma, v.lambda, v.align));
  return r.svg + table(["N", "SGD", "ridge"], r.points.map((p) => [p.n, fmt(p.sgd), fmt(p.ridge)]));
});

wire("compare", (v) => {
  const r = JSON.parse(sgd_vs_ridge_demo(v.d, v.beta, v.n_train, v.align, BigInt(v.seed)));
  return r.svg + table(["learner", "tuned hyperparameter", "excess risk"], r.fits.map((f) => [f.algorithm, fmt(f.hyperparameter), fmt(f.delta)]));
});
