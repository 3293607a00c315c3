import init, { tag_text, parse_llm_response, evaluate_conll } from "./pkg/metaflora_web.js";

const $ = (id) => document.getElementById(id);

function tokens(sentence) {
  const row = document.createElement("div");
  sentence.tokens.forEach((t, i) => {
    const tag = sentence.tags[i];
    const cell = document.createElement("span");
    cell.className = "tok " + tag;
    cell.textContent = t;
    const label = document.createElement("small");
    label.textContent = tag;
    cell.appendChild(label);
    row.appendChild(cell);
  });
  return row;
}

function pre(text) {
  const p = document.createElement("pre");
  p.textContent = text;
  return p;
}

function show(out, fn) {
  out.replaceChildren();
  try {
    fn(out);
  } catch (e) {
    const err = document.createElement("p");
    err.className = "error";
    err.textContent = e.message ?? String(e);
    out.appendChild(err);
  }
}

await init();

$("tag-run").onclick = () => show($("tag-out"), (out) => {
  const r = JSON.parse(tag_text($("tag-text").value, $("tag-lexicon").value));
  r.sentences.forEach((s) => out.appendChild(tokens(s)));
  out.appendChild(pre(r.conll));
});

$("llm-run").onclick = () => show($("llm-out"), (out) => {
  const r = JSON.parse(parse_llm_response($("llm-raw").value, $("llm-sentence").value));
  out.appendChild(pre(r.prompt));
  out.appendChild(tokens(r.sentence));
  const summary = [
    "answer: " + (r.has_metaphor ? "yes" : "no"),
    "names: " + (r.names.join(", ") || "none"),
  ];
  if (r.dropped.length) summary.push("dropped (not in sentence): " + r.dropped.join(", "));
  if (r.unmatched.length) summary.push("not aligned: " + r.unmatched.join(", "));
  out.appendChild(pre(summary.join("\n")));
});

$("eval-run").onclick = () => show($("eval-out"), (out) => {
  const r = JSON.parse(evaluate_conll($("eval-gold").value, $("eval-pred").value));
  out.appendChild(pre(r.markdown));
  const rows = Object.entries(r.report.per_class)
    .map(([c, m]) => `${c}  P ${(m.precision * 100).toFixed(4)}  R ${(m.recall * 100).toFixed(4)}  F1 ${(m.f1 * 100).toFixed(4)}`);
  out.appendChild(pre(rows.join("\n")));
});
