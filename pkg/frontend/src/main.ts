import { App } from "./app";
import "./style.css";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}

const sessionId = window.location.hash.slice(1) || "studio";
const scheme = window.location.protocol === "https:" ? "wss" : "ws";
const app = new App(root, `${scheme}://${window.location.host}/ws/${sessionId}`);
app.connect();
