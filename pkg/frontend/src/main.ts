// Browser entry point. The static server injects window.TOLLGATE_API_BASE.

import { TollgateApi } from "./api.js";
import { PortalApp } from "./app.js";

declare global {
  interface Window {
    TOLLGATE_API_BASE?: string;
  }
}

const base = window.TOLLGATE_API_BASE ?? "http://127.0.0.1:8088";
const root = document.getElementById("root");
if (!root) throw new Error("missing #root element");

const app = new PortalApp(root, new TollgateApi(base));
void app.start();
