// Browser bootstrap: wires the controller to the page. All logic lives in
// controller/model/render; this file only touches the DOM.

import { WashyApi } from "./api.js";
import { AppController } from "./controller.js";
import {
  renderDevice,
  renderForm,
  renderPersonaBadge,
  renderSlots,
  renderTranscript,
} from "./render.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function readConfig(): { baseUrl: string; token: string } | null {
  const baseUrl = localStorage.getItem("washy.baseUrl") ?? window.location.origin;
  const token = localStorage.getItem("washy.token");
  return token ? { baseUrl, token } : null;
}

function promptForToken(message = "Paste your access token"): void {
  const token = window.prompt(message);
  if (token) {
    localStorage.setItem("washy.token", token.trim());
    window.location.reload();
  }
}

function start(): void {
  const cfg = readConfig();
  if (!cfg) {
    promptForToken();
    return;
  }

  const transcript = el<HTMLDivElement>("transcript");
  const slotsPane = el<HTMLDivElement>("slots");
  const formPane = el<HTMLDivElement>("notification");
  const deviceBadge = el<HTMLSpanElement>("device");
  const personaBadge = el<HTMLSpanElement>("persona");
  const input = el<HTMLInputElement>("chat-input");
  const sendButton = el<HTMLButtonElement>("chat-send");

  const api = new WashyApi(cfg);
  const app = new AppController(api, {
    onTranscript(bubbles) {
      transcript.innerHTML = renderTranscript(bubbles);
      transcript.scrollTop = transcript.scrollHeight;
    },
    onSlots(view) {
      slotsPane.innerHTML = renderSlots(view);
    },
    onForm(form) {
      formPane.innerHTML = form ? renderForm(form) : "";
      if (form) {
        formPane.querySelector(".confirm")?.addEventListener("click", () => {
          void app.confirmForm().then(() => app.refreshDevice());
        });
        formPane.querySelector(".cancel")?.addEventListener("click", () => {
          void app.cancelForm();
        });
      }
    },
    onDevice(status) {
      deviceBadge.innerHTML = renderDevice(status);
    },
    onAccount(account) {
      personaBadge.innerHTML = renderPersonaBadge(account.persona, account.display_name);
    },
    onAuthError() {
      localStorage.removeItem("washy.token");
      promptForToken("Session rejected; paste a valid access token");
    },
  });

  const syncSendState = () => {
    sendButton.disabled = !app.canSend(input.value);
  };
  input.addEventListener("input", syncSendState);
  syncSendState();

  const send = () => {
    const text = input.value;
    if (!app.canSend(text)) return;
    input.value = "";
    syncSendState();
    void app.sendChat(text).catch(() => undefined).then(() => app.refreshDevice());
  };
  sendButton.addEventListener("click", send);
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") send();
  });

  const pollLoop = async () => {
    const delay = await app.pollOnce();
    window.setTimeout(() => void pollLoop(), delay);
  };

  void app
    .init()
    .then(() => void pollLoop())
    .catch(() => undefined);

  // Keep the slots and device panes fresh alongside the notification poll.
  window.setInterval(() => {
    void app.refreshSlots().catch(() => undefined);
    void app.refreshDevice().catch(() => undefined);
  }, 10000);
}

document.addEventListener("DOMContentLoaded", start);
