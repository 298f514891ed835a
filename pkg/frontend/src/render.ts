// DOM builders. Server-authoritative rule: these render only what the API
// response contains; a redacted field has no row, placeholder, or blank.

import type { ChatMessage, FriendRow, ProfileView } from "./api.js";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document, tag: K, className?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

const FIELD_LABELS: Record<string, string> = {
  gender: "Gender",
  birthday: "Birthday",
  status_text: "Status",
  email: "Email",
  phone: "Phone",
  city: "City",
  country: "Country",
};

export function profileCard(doc: Document, profile: ProfileView): HTMLElement {
  const card = el(doc, "div", "profile-card");
  card.dataset.username = profile.username;
  const head = el(doc, "div", "profile-head");
  head.appendChild(el(doc, "span", "nickname", profile.nickname));
  head.appendChild(el(doc, "span", "username", `[${profile.username}]`));
  card.appendChild(head);
  if (profile.interests.length) {
    card.appendChild(el(doc, "div", "interests", profile.interests.join(", ")));
  }
  for (const [sectionName, fields] of Object.entries(profile.sections ?? {})) {
    const entries = Object.entries(fields).filter(([, v]) => v !== null && v !== "");
    if (!entries.length) continue;
    const section = el(doc, "dl", `section section-${sectionName}`);
    for (const [name, value] of entries) {
      const dt = el(doc, "dt", `field-label field-${name}`,
                    FIELD_LABELS[name] ?? name);
      const dd = el(doc, "dd", `field-value field-${name}`, String(value));
      section.appendChild(dt);
      section.appendChild(dd);
    }
    card.appendChild(section);
  }
  return card;
}

export function friendRow(doc: Document, friend: FriendRow): HTMLElement {
  const row = el(doc, "div", friend.online ? "friend online" : "friend offline");
  row.dataset.username = friend.username;
  const avatar = el(doc, "span", "avatar", friend.nickname.slice(0, 1).toUpperCase());
  row.appendChild(avatar);
  // Display alias when set, with the handle in brackets after the name.
  const shown = friend.alias ?? friend.nickname;
  row.appendChild(el(doc, "span", "name", shown));
  row.appendChild(el(doc, "span", "handle", `[${friend.username}]`));
  row.appendChild(el(doc, "span", "group-tag", friend.group));
  row.appendChild(el(doc, "span", "presence-dot", friend.online ? "●" : "○"));
  return row;
}

export function chatRow(doc: Document, message: ChatMessage, self: string): HTMLElement {
  const mine = message.sender_username === self;
  const row = el(doc, "div", mine ? "chat-row mine" : "chat-row theirs");
  row.dataset.msgId = String(message.msg_id);
  row.dataset.conversation = message.conversation;
  row.appendChild(el(doc, "span", "chat-sender", message.sender_username));
  if (message.body !== null) {
    row.appendChild(el(doc, "span", "chat-body", message.body));
  } else if (message.blob_id) {
    const link = el(doc, "a", "chat-attachment", "attachment");
    link.setAttribute("href", `/api/v1/blob/${message.blob_id}`);
    row.appendChild(link);
  }
  return row;
}

export function feedItem(doc: Document, event: Record<string, unknown>): HTMLElement {
  const item = el(doc, "div", "feed-item");
  item.dataset.eventId = String(event.event_id);
  const kind = String(event.kind);
  const actor = String(event.actor_username);
  const subject = (event.subject ?? {}) as Record<string, unknown>;
  let line: string;
  switch (kind) {
    case "AvatarChanged":
      line = `${actor} changed their avatar`;
      break;
    case "BlogPublished":
      line = `${actor} published a new blog: ${subject.title ?? ""}`;
      break;
    case "PhotosUploaded":
      line = `${actor} uploaded ${subject.count ?? "?"} new photos`;
      break;
    default:
      line = `${actor} updated their profile`;
  }
  item.appendChild(el(doc, "span", "feed-line", line));
  item.appendChild(el(doc, "span", "feed-comments",
                      `${event.comment_count ?? 0} comments`));
  return item;
}

export function banner(doc: Document, code: string, message: string): HTMLElement {
  const node = el(doc, "div", "banner error", `${code}: ${message}`);
  node.dataset.code = code;
  return node;
}
