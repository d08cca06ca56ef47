// Browser entry point. Document refs come from the query string so one
// served bundle can open any fixture:
//   index.html?map=demo/map.json&scene=demo/scene.json&rig=demo/rig.json

import { ConsoleApi } from "./api.js";
import { Console } from "./console.js";

const params = new URLSearchParams(globalThis.location.search);
const refs = {
  map: params.get("map") ?? "demo/map.json",
  scene: params.get("scene") ?? "demo/scene.json",
  rig: params.get("rig") ?? "demo/rig.json",
};
const base = params.get("api") ?? "";

const root = globalThis.document.getElementById("console");
if (root) {
  const console_ = new Console(new ConsoleApi(base), root);
  console_.init(refs).catch((err) => {
    root.textContent = `failed to open session: ${err instanceof Error ? err.message : err}`;
  });
}
