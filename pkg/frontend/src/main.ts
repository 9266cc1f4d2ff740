import { ApiClient } from "./api.js";
import { ReviewSession } from "./session.js";
import { App } from "./views.js";

// Same-origin by default; set window.SERVICE_URL before loading to point at
// a service on another host.
declare global {
  interface Window {
    SERVICE_URL?: string;
  }
}

const api = new ApiClient(window.SERVICE_URL ?? "");
const session = new ReviewSession(api);
new App(session).start();
