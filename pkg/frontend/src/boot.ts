/** Browser entry point: mount the app on #app once the DOM is ready. */

import { initApp } from "./app.js";

const mount = document.getElementById("app");
if (mount) {
  initApp(mount).catch((err) => {
    mount.textContent = "failed to reach the model service";
    console.error(err);
  });
}
