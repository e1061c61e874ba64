// HTML renderers: pure string producers so they are testable without a DOM.
// Reply classes become data attributes the stylesheet keys on (regret and
// counter-suggest replies are visually distinct).

import type { DeviceStatus } from "./api.js";
import type { ChatBubble, NotificationForm, SlotsView, ViewSlot } from "./model.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderBubble(bubble: ChatBubble): string {
  const cls = bubble.replyClass ? ` data-class="${esc(bubble.replyClass)}"` : "";
  const sentiment = bubble.sentiment ? ` data-sentiment="${esc(bubble.sentiment)}"` : "";
  const text = esc(bubble.text).replace(/\*\*(.+?)\*\*/g, "<strong>$1</strong>").replace(/\n/g, "<br>");
  return `<div class="bubble ${bubble.role}"${cls}${sentiment}>${text}</div>`;
}

export function renderTranscript(bubbles: ChatBubble[]): string {
  return bubbles.map(renderBubble).join("");
}

function renderSlotRow(slot: ViewSlot): string {
  return (
    `<tr data-id="${esc(slot.id)}">` +
    `<td>${esc(slot.localStart)}</td>` +
    `<td>${slot.durationMinutes} min</td>` +
    `<td><span class="badge state-${esc(slot.stateBadge.toLowerCase())}">${esc(slot.stateBadge)}</span></td>` +
    `<td><span class="badge quality-${esc(slot.qualityBadge.toLowerCase())}">${esc(slot.qualityBadge)}</span></td>` +
    `</tr>`
  );
}

export function renderSlots(view: SlotsView): string {
  const section = (title: string, rows: ViewSlot[]) =>
    `<h3>${title}</h3>` +
    (rows.length
      ? `<table><thead><tr><th>Start (local)</th><th>Duration</th><th>State</th><th>Quality</th></tr></thead>` +
        `<tbody>${rows.map(renderSlotRow).join("")}</tbody></table>`
      : `<p class="empty">Nothing here.</p>`);
  return section("Active", view.active) + section("Recently expired", view.recentlyExpired);
}

export function renderForm(form: NotificationForm): string {
  return (
    `<div class="notification-form" data-event="${esc(form.eventId)}" data-reminder="${esc(form.reminderId)}">` +
    `<p>Your laundry slot at <strong>${esc(form.localStart)}</strong> (${form.durationMinutes} min) is coming up.</p>` +
    `<button class="confirm">Confirm</button> <button class="cancel">Cancel</button>` +
    `</div>`
  );
}

export function renderDevice(status: DeviceStatus): string {
  const state = status.running ? "running" : status.plug_on ? "powered" : "off";
  return `<span class="device device-${state}">machine: ${state}</span>`;
}

export function renderPersonaBadge(persona: string, displayName: string): string {
  return `<span class="persona persona-${esc(persona)}">${esc(displayName)} · ${esc(persona)}</span>`;
}
