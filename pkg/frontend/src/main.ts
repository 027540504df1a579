/** Entry point: resolve the worker id from the URL (the only client-side
 * state), then run the review loop with global keyboard shortcuts. */

import { AnnotationApi } from "./api.js";
import { attachKeyboard, SessionController, workerFromUrl } from "./app.js";
import { renderWorkerPrompt } from "./view.js";

function boot(): void {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app mount point");
  }
  const worker = workerFromUrl(window.location.search);
  if (!worker) {
    renderWorkerPrompt(root, (chosen) => {
      const url = new URL(window.location.href);
      url.searchParams.set("worker", chosen);
      window.location.assign(url.toString());
    });
    return;
  }
  const controller = new SessionController(root, new AnnotationApi(), worker);
  attachKeyboard(controller, document);
  void controller.start();
}

boot();
