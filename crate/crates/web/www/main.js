import init, { Demo } from "./pkg/ace_web.js";

const $ = (id) => document.getElementById(id);
let demo;

function log(text, isError = false) {
  const line = document.createElement("div");
  line.textContent = text;
  if (isError) line.className = "err";
  $("log").prepend(line);
}

function cell(row, text) {
  const td = document.createElement("td");
  td.textContent = text;
  row.appendChild(td);
}

function render() {
  const s = JSON.parse(demo.state());
  $("summary").textContent =
    `${s.fset.length} rows, ${s.iset.length} index entries, ${s.keywords} keywords, ${s.batches} batches`;
  const fset = $("fset");
  fset.replaceChildren();
  for (const r of s.fset) {
    const tr = document.createElement("tr");
    cell(tr, r.r_id);
    cell(tr, r.deltas.join(" "));
    fset.appendChild(tr);
  }
  const iset = $("iset");
  iset.replaceChildren();
  for (const e of s.iset) {
    const tr = document.createElement("tr");
    cell(tr, e.label);
    cell(tr, e.ciphertext_len);
    iset.appendChild(tr);
  }
}

function guarded(fn) {
  return () => {
    try {
      fn();
      render();
    } catch (e) {
      log(String(e.message ?? e), true);
    }
  };
}

$("add").onclick = guarded(() => {
  const r = JSON.parse(demo.add_records($("csv").value));
  log(`added ${r.records} records, ${r.entries} index entries`);
});

$("search").onclick = guarded(() => {
  const r = JSON.parse(demo.search($("keyword").value));
  const ids = r.ids.length ? r.ids.join(", ") : "(none)";
  log(`${r.keyword}: ${ids}  [${r.iterations} iterations, ${r.hits} hits]`);
});

$("revoke").onclick = guarded(() => {
  const id = $("revoke-id").value;
  log(`revoked ${id}: ${demo.revoke(id)} index entries removed`);
});

await init();
// key generation blocks the page briefly
setTimeout(() => {
  const seed = crypto.getRandomValues(new Uint32Array(1))[0];
  demo = new Demo(seed);
  $("status").textContent = "Ready.";
  for (const b of ["add", "search", "revoke"]) $(b).disabled = false;
  render();
}, 0);
