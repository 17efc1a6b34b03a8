import init, { visibility_explorer, eit_spectrum, bell_explorer } from "./pkg/qisim_web.js";

const fmt = (x, digits = 4) => (x === null || x === undefined ? "n/a" : Number(x).toPrecision(digits));

function wire(sectionId, compute, describe) {
  const section = document.getElementById(sectionId);
  const inputs = [...section.querySelectorAll("input")];
  const readout = section.querySelector(".readout");
  const plot = section.querySelector(".plot");
  const update = () => {
    inputs.forEach((i) => (i.nextElementSibling.textContent = i.value));
    const result = JSON.parse(compute(...inputs.map((i) => Number(i.value))));
    if (result.error) {
      readout.innerHTML = `<span class="error">${result.error}</span>`;
      return;
    }
    readout.textContent = describe(result);
    plot.innerHTML = result.svg;
  };
  inputs.forEach((i) => i.addEventListener("input", update));
  update();
}

await init();

wire("visibility", visibility_explorer, (r) => `V = ${fmt(r.visibility)}`);
wire("eit", eit_spectrum, (r) =>
  `window ${fmt(r.window_fwhm_hz / 1e6)} MHz, delay ${fmt(r.group_delay_s * 1e9)} ns, ` +
  `2π·Δf·τ = ${fmt(r.delay_bandwidth_product)}, v_g = ${fmt(r.v_g, 3)} m/s`);
wire("bell", bell_explorer, (r) =>
  `S = ${fmt(r.s)} (${r.violated ? "violates" : "within"} the local bound 2), ` +
  `fringe visibility H ${fmt(r.visibility_h, 3)}, + ${fmt(r.visibility_plus, 3)}`);
