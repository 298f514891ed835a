// Browser entry point: login form, panel navigation, key bindings, and the
// background loops (long-poll events + heartbeats).

import { ApiError } from "./api.js";
import { NearhubApp } from "./app.js";

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const app = new NearhubApp(document, window.location.origin);
  app.mount(byId("app"));

  const loginForm = byId<HTMLFormElement>("login-form");
  const status = byId<HTMLElement>("login-status");
  loginForm.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const username = (byId<HTMLInputElement>("login-username")).value;
    const password = (byId<HTMLInputElement>("login-password")).value;
    void (async () => {
      try {
        await app.login(username, password);
        loginForm.style.display = "none";
        status.textContent = `signed in as ${username}`;
        app.startBackground();
        await afterLogin(app);
      } catch (err) {
        if (err instanceof ApiError) {
          status.textContent = err.recoveryHint
            ? `${err.code} — forgot your password? Use the recovery flow.`
            : `${err.code}: ${err.message}`;
        } else {
          throw err;
        }
      }
    })();
  });

  const cityForm = byId<HTMLFormElement>("city-form");
  cityForm.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const query = (byId<HTMLInputElement>("city-input")).value;
    void app.locateByCity(query);
  });

  document.addEventListener("keydown", (ev) => {
    const target = ev.target as HTMLElement | null;
    if (target && (target.tagName === "INPUT" || target.tagName === "TEXTAREA")) {
      return; // typing, not navigating the map
    }
    app.handleKey(ev.key);
  });

  const searchForm = byId<HTMLFormElement>("search-form");
  searchForm.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const query = (byId<HTMLInputElement>("search-input")).value;
    if (query) void app.searchFriends(query);
  });

  const chatForm = byId<HTMLFormElement>("chat-form");
  chatForm.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const input = byId<HTMLInputElement>("chat-input");
    if (input.value) {
      void app.sendChat(input.value);
      input.value = "";
    }
  });
}

async function afterLogin(app: NearhubApp): Promise<void> {
  if (navigator.geolocation) {
    navigator.geolocation.getCurrentPosition(
      (pos) => void app.locateByGps(pos.coords.latitude, pos.coords.longitude,
                                    pos.coords.accuracy || 15),
      () => void app.refreshMap(),
    );
  } else {
    await app.refreshMap();
  }
  await app.refreshFriends();
  await app.openHomepage();
  await app.openSettings();
}

document.addEventListener("DOMContentLoaded", () => void boot());
