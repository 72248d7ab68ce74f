import init, { Demo } from "./pkg/minima_web_demo.js";

const $ = (id) => document.getElementById(id);
let demo = null;

function status(text) {
  $("status").textContent = text;
}

function render() {
  const view = JSON.parse(demo.view());
  $("canvas").innerHTML = demo.svg();
  $("counts").textContent = view.level_counts
    .map((c) => (c.level < 0 ? "root" : `level ${c.level}: ${c.count}`))
    .join(" | ");
  const byId = new Map(view.nodes.map((n) => [n.id, n]));
  const item = (n) => {
    const li = document.createElement("li");
    const label = document.createElement("span");
    label.textContent = n.level < 0 ? "root" : `#${n.id} level ${n.level} cost ${n.cost.toFixed(3)}`;
    label.className = [n.id === view.selection ? "selected" : "", n.status === "spurious" ? "spurious" : ""].join(" ");
    label.onclick = () => act(() => demo.select(n.id));
    li.append(label);
    if (n.children.length) {
      const ul = document.createElement("ul");
      n.children.forEach((c) => ul.append(item(byId.get(c))));
      li.append(ul);
    }
    return li;
  };
  const root = document.createElement("ul");
  root.append(item(byId.get(0)));
  $("tree").replaceChildren(root);
}

function act(f) {
  try {
    const out = f();
    if (out) {
      const r = JSON.parse(out);
      status(r.outcome.notice ?? r.outcome.kind.replace("_", " "));
    }
  } catch (e) {
    status(String(e.message ?? e));
  }
  render();
}

function download(csv) {
  const a = document.createElement("a");
  a.href = URL.createObjectURL(new Blob([csv], { type: "text/csv" }));
  a.download = "waypoints.csv";
  a.click();
  URL.revokeObjectURL(a.href);
}

function reset() {
  try {
    demo = new Demo($("scenario").value, BigInt($("seed").value || 0), BigInt($("budget").value || 20000));
    status("press w to expand the root");
    render();
  } catch (e) {
    status(String(e.message ?? e));
  }
}

document.addEventListener("keydown", (ev) => {
  if (!demo || ev.target.tagName === "INPUT" || ev.target.tagName === "SELECT") return;
  if (ev.key === "w") {
    status("expanding...");
    // Let the notice paint before the synchronous expansion runs.
    setTimeout(() => act(() => demo.key("w")), 20);
  } else if (ev.key === "u") {
    const csv = demo.export_csv();
    if (csv) download(csv);
    else status("the root has no path");
  } else if (ev.key.startsWith("Arrow")) {
    ev.preventDefault();
    act(() => demo.key(ev.key));
  }
});

await init();
for (const name of Demo.scenarios()) {
  $("scenario").append(new Option(name, name, false, name === "planar_manipulator_2dof"));
}
$("reset").onclick = reset;
reset();
