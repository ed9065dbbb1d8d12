// Browser entry point: wire the controller to the DOM and re-render on
// every state change.

import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import { Actions, mount, renderApp } from "./render.js";

const api = new ApiClient("");
const controller = new SessionController(api);

const actions: Actions = {
  start(kbText, sigma, strategy) {
    void controller.start({ kb_text: kbText, sigma, strategy });
  },
  answer(value) {
    void controller.answer(value);
  },
  reset() {
    controller.reset();
  },
  download() {
    const blob = new Blob([controller.transcriptJson()], { type: "application/json" });
    const url = URL.createObjectURL(blob);
    const link = document.createElement("a");
    link.href = url;
    link.download = "transcript.json";
    link.click();
    URL.revokeObjectURL(url);
  },
};

function rerender(): void {
  const root = document.getElementById("app");
  if (root) mount(root, renderApp(controller.state, actions), document);
}

controller.subscribe(rerender);
rerender();
