import { ApiClient } from "./api";
import { initApp } from "./app";

// Same-origin by default; override with ?api=http://host:port when the
// service runs elsewhere.
const apiBase = new URLSearchParams(window.location.search).get("api") ?? "";
initApp(document, new ApiClient(apiBase));
