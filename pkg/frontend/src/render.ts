// Declarative rendering: build a plain node tree from the view state, then
// mount it. Keeping the tree inspectable lets tests drive the UI by
// invoking the same click handlers the browser would.

import { AnswerValue, DiagnosisView } from "./api.js";
import { ViewState } from "./controller.js";

export interface VNode {
  tag: string;
  attrs?: Record<string, string>;
  on?: Record<string, () => void>;
  children?: Array<VNode | string>;
}

export interface Actions {
  start(kbText: string, sigma: number, strategy: string): void;
  answer(value: AnswerValue): void;
  reset(): void;
  download(): void;
}

export function h(
  tag: string,
  attrs?: Record<string, string>,
  ...children: Array<VNode | string>
): VNode {
  return { tag, attrs, children };
}

function button(label: string, onClick: () => void, disabled: boolean, cls = ""): VNode {
  const attrs: Record<string, string> = { class: `btn ${cls}`.trim() };
  if (disabled) attrs.disabled = "disabled";
  return { tag: "button", attrs, on: { click: onClick }, children: [label] };
}

function probabilityBars(diagnoses: DiagnosisView[]): VNode {
  return h(
    "div",
    { class: "bars" },
    ...diagnoses.map((d) =>
      h(
        "div",
        { class: "bar-row" },
        h("span", { class: "bar-label" }, `[${d.axioms.join(", ")}]`),
        h(
          "div",
          { class: "bar-track" },
          h("div", {
            class: "bar-fill",
            style: `width: ${(d.probability * 100).toFixed(1)}%`,
          }),
        ),
        h("span", { class: "bar-value" }, `${(d.probability * 100).toFixed(1)}%`),
      ),
    ),
  );
}

const SAMPLE_KB = `[axioms]
ax1 : A_w -> B_w
ax2 : B_w -> C_w
ax3 : C_w -> D_w
ax4 : D_w -> R_w

[background]
A_w
!R_w
A_v
`;

function startScreen(state: ViewState, actions: Actions): VNode {
  return h(
    "div",
    { class: "screen start-screen" },
    h("h1", {}, "KB debugger"),
    h("p", {}, "Paste a knowledge base, then answer the debugger's questions."),
    h("textarea", { id: "kb-input", rows: "14", spellcheck: "false" }, SAMPLE_KB),
    h(
      "div",
      { class: "params" },
      h("label", {}, "acceptance threshold ", h("input", { id: "sigma-input", value: "0.95" })),
      h(
        "label",
        {},
        "strategy ",
        h(
          "select",
          { id: "strategy-input" },
          h("option", { value: "entropy" }, "entropy"),
          h("option", { value: "split" }, "split-in-half"),
          h("option", { value: "random" }, "random"),
        ),
      ),
    ),
    button("Start session", () => startFromInputs(actions), state.pending, "primary start-button"),
  );
}

function startFromInputs(actions: Actions): void {
  const doc = globalThis.document;
  const kb = (doc?.getElementById("kb-input") as HTMLTextAreaElement | null)?.value ?? SAMPLE_KB;
  const sigma = parseFloat(
    (doc?.getElementById("sigma-input") as HTMLInputElement | null)?.value ?? "0.95",
  );
  const strategy =
    (doc?.getElementById("strategy-input") as HTMLSelectElement | null)?.value ?? "entropy";
  actions.start(kb, Number.isFinite(sigma) ? sigma : 0.95, strategy);
}

function queryScreen(state: ViewState, actions: Actions): VNode {
  const projection = state.projection!;
  const counts = projection.counts;
  return h(
    "div",
    { class: "screen query-screen" },
    h("h1", {}, `Question ${projection.history.length + 1}`),
    h("p", {}, "Should the intended KB entail all of these sentences?"),
    h(
      "ul",
      { class: "query-sentences" },
      ...projection.query.map((sentence) => h("li", { class: "sentence" }, sentence)),
    ),
    h(
      "p",
      { class: "counts" },
      `predicts yes: ${counts.dx} / predicts no: ${counts.dnx} / no prediction: ${counts.dz}`,
    ),
    h(
      "div",
      { class: "answers" },
      button("Yes", () => actions.answer("yes"), state.pending, "yes-button"),
      button("No", () => actions.answer("no"), state.pending, "no-button"),
      button("Unknown", () => actions.answer("unknown"), state.pending, "unknown-button"),
    ),
    h("h2", {}, "Candidate repairs"),
    probabilityBars(projection.leading),
    historyList(projection.history),
  );
}

function historyList(history: Array<{ query: string[]; answer: string }>): VNode {
  if (!history.length) return h("div", { class: "history empty" });
  return h(
    "div",
    { class: "history" },
    h("h2", {}, "Asked so far"),
    h(
      "ol",
      {},
      ...history.map((entry) =>
        h("li", {}, `${entry.query.join(", ")} → ${entry.answer}`),
      ),
    ),
  );
}

function resultScreen(state: ViewState, actions: Actions): VNode {
  const projection = state.projection!;
  const accepted = projection.result;
  const top = accepted[0];
  const banner =
    projection.status === "stopped_threshold" && top
      ? `accepted at p=${top.probability.toFixed(2)}`
      : projection.status === "stopped_no_query"
        ? "no further discriminating questions"
        : projection.status;
  return h(
    "div",
    { class: "screen result-screen" },
    h("h1", {}, "Accepted diagnosis"),
    h("p", { class: "stop-banner" }, banner),
    h(
      "div",
      { class: "accepted" },
      ...accepted.map((d) =>
        h(
          "div",
          { class: "diagnosis" },
          h("h2", {}, `[${d.axioms.join(", ")}]`),
          h("ul", {}, ...d.axiom_texts.map((text) => h("li", { class: "axiom-text" }, text))),
        ),
      ),
    ),
    h("h2", {}, "Final probabilities"),
    probabilityBars(projection.leading),
    historyList(projection.history),
    h(
      "div",
      { class: "result-actions" },
      button("Download transcript", () => actions.download(), false, "download-button"),
      button("New session", () => actions.reset(), false, "reset-button"),
    ),
  );
}

export function renderApp(state: ViewState, actions: Actions): VNode {
  const parts: Array<VNode | string> = [];
  if (state.error) {
    parts.push(
      h(
        "div",
        { class: "error-banner" },
        state.error + " ",
        button("Retry", () => actions.reset(), false, "retry-button"),
      ),
    );
  }
  if (state.screen === "start") parts.push(startScreen(state, actions));
  else if (state.screen === "query") parts.push(queryScreen(state, actions));
  else parts.push(resultScreen(state, actions));
  if (state.pending) parts.push(h("div", { class: "pending-indicator" }, "working..."));
  return h("div", { class: "app" }, ...parts);
}

export function mount(root: Element, vnode: VNode, doc: Document): void {
  root.replaceChildren(build(vnode, doc));
}

function build(node: VNode | string, doc: Document): Node {
  if (typeof node === "string") return doc.createTextNode(node);
  const el = doc.createElement(node.tag);
  for (const [key, value] of Object.entries(node.attrs ?? {})) {
    el.setAttribute(key, value);
  }
  if (node.tag === "textarea" && node.children?.length) {
    (el as HTMLTextAreaElement).value = String(node.children[0]);
    return el;
  }
  for (const [event, handler] of Object.entries(node.on ?? {})) {
    el.addEventListener(event, handler);
  }
  for (const child of node.children ?? []) {
    el.appendChild(build(child, doc));
  }
  return el;
}

// tree helpers used by tests and by main.ts for focus management

export function findAll(node: VNode | string, predicate: (n: VNode) => boolean): VNode[] {
  if (typeof node === "string") return [];
  const hits = predicate(node) ? [node] : [];
  for (const child of node.children ?? []) {
    hits.push(...findAll(child, predicate));
  }
  return hits;
}

export function findByClass(node: VNode, cls: string): VNode | undefined {
  return findAll(node, (n) => (n.attrs?.class ?? "").split(" ").includes(cls))[0];
}

export function textOf(node: VNode | string): string {
  if (typeof node === "string") return node;
  return (node.children ?? []).map(textOf).join(" ");
}
