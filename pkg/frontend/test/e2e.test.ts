// End-to-end against the real gateway (demo fixture, synthetic tiles,
// 3-second liveness window). Two NearhubApp instances play two browser
// sessions.

import { beforeAll, describe, expect, inject, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { NearhubApp } from "../src/app.js";

const baseUrl = () => inject("baseUrl");

const PASS = (name: string) => `${name}-pass-2026`;

async function session(username: string): Promise<NearhubApp> {
  const app = new NearhubApp(document, baseUrl());
  await app.login(username, PASS(username));
  return app;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

describe("map view", () => {
  it("switches layers with keys 1/2/3 and re-requests tiles", async () => {
    const alice = await session("alice");
    await alice.refreshMap();
    const srcOf = () =>
      alice.map.root.querySelector<HTMLImageElement>("img.tile")!.src;
    expect(srcOf()).toContain("/tiles/normal/");

    expect(alice.handleKey("2")).toBe(true);
    expect(alice.state.map.layer).toBe("satellite");
    expect(srcOf()).toContain("/tiles/satellite/");

    expect(alice.handleKey("3")).toBe(true);
    expect(srcOf()).toContain("/tiles/hybrid/");

    expect(alice.handleKey("1")).toBe(true);
    expect(srcOf()).toContain("/tiles/normal/");
  });

  it("clamps zoom at both ends of [0, 19]", async () => {
    const alice = await session("alice");
    await alice.refreshMap();
    alice.state.map.zoom = 19;
    alice.handleKey("*");
    alice.handleKey("+");
    expect(alice.state.map.zoom).toBe(19);
    alice.state.map.zoom = 0;
    alice.handleKey("#");
    alice.handleKey("-");
    expect(alice.state.map.zoom).toBe(0);
    // the rendered tiles exist and are within the z=0 world
    const imgs = [...alice.map.root.querySelectorAll<HTMLImageElement>("img.tile")];
    expect(imgs.length).toBeGreaterThan(0);
    for (const img of imgs) {
      expect(img.src).toContain("/tiles/normal/0/0/0");
    }
  });

  it("shows nearby friends as markers with server-filtered popups", async () => {
    const alice = await session("alice");
    await alice.refreshMap();
    const marker = alice.map.root.querySelector<HTMLElement>(
      '.marker[data-username="bob"]');
    expect(marker).not.toBeNull();
    // popup carries the privacy-filtered profile: nickname present,
    // and no phone for the default FriendsOnly-but-we-are-friends tier
    const popup = marker!.querySelector(".marker-popup")!;
    expect(popup.querySelector(".nickname")?.textContent).toBe("Bobby");
  });

  it("surfaces UnknownCity as a banner", async () => {
    const alice = await session("alice");
    await alice.locateByCity("Atlantis, Sea");
    const bannerNode = alice.root.querySelector<HTMLElement>(".banner.error");
    expect(bannerNode?.dataset.code).toBe("UnknownCity");
  });
});

describe("friend search", () => {
  it("renders recommendation results verbatim for interest queries",
     async () => {
    // dave shares "chess" with bob and is not bob's... he is bob's friend;
    // erin shares "maps"/"photography" with catherine. Use catherine.
    const cat = await session("catherine");
    const box = await cat.searchFriends("interests: photography");
    const api = new ApiClient(baseUrl());
    await api.login("catherine", PASS("catherine"));
    const expected = await api.recommend();
    const rendered = [...box.querySelectorAll<HTMLElement>(".search-result")]
      .map((row) => row.dataset.username);
    expect(rendered).toEqual(expected.map((r) => r.username));
    expect(rendered.length).toBeGreaterThan(0);
  });

  it("username search shows the privacy-filtered profile", async () => {
    const alice = await session("alice");
    const box = await alice.searchFriends("dave");
    // alice and dave are strangers; location defaults to FriendsOnly
    expect(box.querySelector(".username")?.textContent).toBe("[dave]");
    expect(box.querySelector(".section-location")).toBeNull();
  });

  it("city search recenters the map", async () => {
    const alice = await session("alice");
    await alice.searchFriends("city: Beijing, China");
    expect(alice.state.map.centerLat).toBeCloseTo(39.9042, 3);
  });
});

describe("privacy across sessions", () => {
  it("a tier change in one session redacts the field in another", async () => {
    const alice = await session("alice");
    const bob = await session("bob");

    const before = await alice.viewProfile("bob");
    expect(before.querySelector(".field-phone")).not.toBeNull();

    await bob.openSettings();
    const row = bob.settingsPanel.querySelector<HTMLElement>(
      '.privacy-row[data-field="phone"]');
    expect(row).not.toBeNull();
    await bob.setPrivacy("phone", "Nobody");

    const after = await alice.viewProfile("bob");
    expect(after.querySelector(".field-phone")).toBeNull();
    expect(after.textContent).not.toContain("1380000");
    // nickname stays public
    expect(after.querySelector(".nickname")?.textContent).toBe("Bobby");
  });
});

describe("friend list presence", () => {
  it("renders an offline row gray after the presence event, no refresh",
     async () => {
    const bob = await session("bob");        // bob online (login heartbeat)
    const alice = await session("alice");
    await alice.refreshFriends();
    const row = () => alice.friendsPanel.querySelector<HTMLElement>(
      '.friend[data-username="bob"]')!;
    expect(row().classList.contains("online")).toBe(true);

    // bob goes silent; the server's liveness window here is 3 s and the
    // sweeper ticks every 2 s, so the flip arrives within ~6 s.
    bob.stopBackground();
    const deadline = Date.now() + 20_000;
    let flipped = false;
    while (Date.now() < deadline && !flipped) {
      await sleep(500);
      await alice.pollOnce();
      flipped = row().classList.contains("offline");
    }
    expect(flipped).toBe(true);
    expect(row().classList.contains("online")).toBe(false);
  }, 40_000);
});

describe("chat", () => {
  it("appends on echo, delivers to the peer, and deduplicates across a "
     + "simulated disconnect", async () => {
    const alice = await session("alice");
    const bob = await session("bob");
    await alice.openChat("bob");
    await bob.openChat("alice");

    await alice.sendChat("meet at the lighthouse?");
    await alice.pollOnce();   // alice's own echo event
    await bob.pollOnce();     // bob's delivery

    const aliceRows = () => alice.chatPanel.querySelectorAll(".chat-row").length;
    const bobRows = () => bob.chatPanel.querySelectorAll(".chat-row").length;
    const aliceBefore = aliceRows();
    const bobBefore = bobRows();
    expect(bob.chatPanel.textContent).toContain("meet at the lighthouse?");
    expect(aliceBefore).toBeGreaterThan(0);

    // reconnect from sequence zero: server re-delivers, client dedups
    bob.events.simulateDisconnect(0);
    await bob.pollOnce();
    await bob.pollOnce();
    expect(bobRows()).toBe(bobBefore);

    alice.events.simulateDisconnect(0);
    await alice.pollOnce();
    expect(aliceRows()).toBe(aliceBefore);
  });

  it("keeps the log consistent with the history API", async () => {
    const alice = await session("alice");
    await alice.openChat("bob");
    const rendered = [...alice.chatPanel.querySelectorAll<HTMLElement>(".chat-row")]
      .map((row) => row.dataset.msgId);
    const api = new ApiClient(baseUrl());
    await api.login("alice", PASS("alice"));
    const history = await api.chatHistory("bob");
    const expected = history.map((m) => String(m.msg_id)).reverse();
    expect(rendered).toEqual(expected);
  });
});

describe("homepage", () => {
  it("shows the seeded friend feed and visitor trace", async () => {
    const alice = await session("alice");
    await alice.openHomepage();
    expect(alice.homePanel.textContent).toContain("published a new blog");

    const bob = await session("bob");
    await bob.viewProfile("alice");
    await alice.openHomepage();
    const visitors = [...alice.homePanel.querySelectorAll(".visitor-row")]
      .map((node) => node.textContent);
    expect(visitors).toContain("bob");
  });

  it("draft blogs stay invisible to friends end to end", async () => {
    const bob = await session("bob");
    const draft = await bob.api.blogWrite("Half-written", "later");
    expect(draft.state).toBe("Draft");

    const alice = await session("alice");
    await alice.openHomepage();
    expect(alice.homePanel.textContent).not.toContain("Half-written");

    await bob.api.blogPublish(draft.post_id);
    await alice.openHomepage();
    expect(alice.homePanel.textContent).toContain("Half-written");
  });
});
