import { ApiClient } from "./api.js";
import { MapExplorer } from "./controller.js";

// Point the explorer at a service with ?api=http://127.0.0.1:8000 when the
// page is not served from the same origin.
const apiBase = new URLSearchParams(window.location.search).get("api") ?? "";
const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const explorer = new MapExplorer(root, new ApiClient(apiBase));
void explorer.init();
