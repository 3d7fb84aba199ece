// Browser entry point. The API origin is configurable at launch time via
// window.DECISIM_API (set it in index.html or inject at deploy time).

import { ApiClient } from "./api.js";
import { createApp } from "./app.js";

declare global {
  interface Window {
    DECISIM_API?: string;
  }
}

const base = window.DECISIM_API ?? "http://127.0.0.1:8712";
const app = createApp(document.getElementById("app") as HTMLElement, new ApiClient(base));
void app.start();
