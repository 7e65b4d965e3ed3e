/**
 * End-to-end: the UI drives a real mock-backed gateway over HTTP (spawned in
 * global setup) inside a jsdom page. Every assertion compares what the DOM
 * shows against what the gateway API reports.
 */

import { beforeAll, describe, expect, inject, test } from "vitest";

import { ChatApp, GatewayClient, initChatUi } from "../src/app";

const PNG_BASE64 =
  "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJ" +
  "AAAADUlEQVR42mNkYPhfDwAChwGA60e6kgAAAABJRU5ErkJggg==";

function pngFile(): File {
  const bytes = Uint8Array.from(Buffer.from(PNG_BASE64, "base64"));
  return new File([bytes], "scan.png", { type: "image/png" });
}

function mount(): HTMLElement {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}

let baseUrl: string;

beforeAll(() => {
  baseUrl = inject("gatewayUrl");
});

describe("chat session flow", () => {
  let app: ChatApp;
  let root: HTMLElement;

  test("creates a session on load", async () => {
    window.sessionStorage.clear();
    root = mount();
    app = await initChatUi(root, baseUrl);
    expect(app.sessionId).toMatch(/^[0-9a-f-]{36}$/);
    expect(root.querySelectorAll(".bubble").length).toBe(0);
  });

  test("text-only turn renders user and assistant bubbles, no model", async () => {
    const input = root.querySelector('[data-testid="composer-input"]') as HTMLInputElement;
    const form = root.querySelector("form.composer") as HTMLFormElement;
    input.value = "hello there";
    form.dispatchEvent(new window.Event("submit", { bubbles: true, cancelable: true }));
    await waitFor(() => root.querySelectorAll(".bubble").length === 2);

    const bubbles = app.visibleTexts();
    expect(bubbles[0]).toEqual({ role: "user", text: "hello there" });
    expect(bubbles[1].role).toBe("assistant");
    expect(bubbles[1].text).toContain("MOCK-RESPONSE");

    const trace = root.querySelector(".bubble.assistant .trace summary") as HTMLElement;
    expect(trace.textContent).toBe("routed: none");
  });

  test("image attachment turn shows a produced-resource preview", async () => {
    await app.send("please segment this scan", [pngFile()]);
    const bubbles = root.querySelectorAll(".bubble");
    expect(bubbles.length).toBe(4);

    const assistant = bubbles[3] as HTMLElement;
    const summary = assistant.querySelector(".trace summary") as HTMLElement;
    expect(summary.textContent).toContain("routed: segmenter");

    const preview = assistant.querySelector("img.preview-image") as HTMLImageElement;
    expect(preview).not.toBeNull();
    expect(preview.src).toContain("/v1/resources/");

    // The preview URL must actually serve the produced image.
    const reply = await fetch(preview.src);
    expect(reply.status).toBe(200);
    expect(reply.headers.get("content-type")).toContain("image/png");
    const served = new Uint8Array(await reply.arrayBuffer());
    expect(served.slice(0, 8)).toEqual(
      Uint8Array.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    );
  });

  test("send control is disabled while a turn is pending", async () => {
    const send = root.querySelector('[data-testid="composer-send"]') as HTMLButtonElement;
    const pending = app.send("describe what the scan shows", []);
    expect(send.disabled).toBe(true);
    await pending;
    expect(send.disabled).toBe(false);

    // Fallback indicator surfaces the borrowed turn.
    const bubbles = root.querySelectorAll(".bubble.assistant");
    const last = bubbles[bubbles.length - 1] as HTMLElement;
    expect(last.querySelector(".trace-fallback")?.textContent).toBe(
      "used attachment from turn 2",
    );
  });

  test("refresh re-renders the transcript identically from the API", async () => {
    const fresh = mount();
    const reloaded = await initChatUi(fresh, baseUrl);
    expect(reloaded.sessionId).toBe(app.sessionId);

    const domTexts = reloaded.visibleTexts();
    const api = await new GatewayClient(baseUrl).transcript(app.sessionId);
    const apiTexts = api.turns.flatMap((turn) => [
      { role: "user", text: turn.query.text ?? "" },
      { role: "assistant", text: turn.response.text ?? "" },
    ]);
    expect(domTexts).toEqual(apiTexts);
    expect(domTexts.length).toBe(6); // three turns so far

    // Turn ordering matches the record indices.
    expect(api.turns.map((t) => t.index)).toEqual([1, 2, 3]);
  });

  test("gateway errors render as inline bubbles and keep the composer enabled", async () => {
    const broken = mount();
    window.sessionStorage.clear();
    const app2 = await initChatUi(broken, baseUrl);
    // Force a 422 by referencing a resource that does not exist.
    await expectTurnError(app2, broken);
    const send = broken.querySelector('[data-testid="composer-send"]') as HTMLButtonElement;
    expect(send.disabled).toBe(false);
  });
});

async function expectTurnError(app2: ChatApp, root: HTMLElement): Promise<void> {
  const missing = "0".repeat(64);
  const reply = await fetch(`${app2.client.baseUrl}/v1/sessions/${app2.sessionId}/turns`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ text: "x", resource_ids: [missing] }),
  });
  expect(reply.status).toBe(422);

  // The same failure through the UI path must surface as an error bubble.
  const fakeFile = new File([new Uint8Array([1, 2, 3])], "doc.pdf", {
    type: "application/pdf",
  });
  await app2.send("upload this", [fakeFile]);
  const error = root.querySelector(".bubble.error");
  expect(error).not.toBeNull();
  expect(error!.textContent).toContain("gateway error");
}

async function waitFor(check: () => boolean, timeoutMs = 10_000): Promise<void> {
  const started = Date.now();
  while (Date.now() - started < timeoutMs) {
    if (check()) return;
    await new Promise((resolve) => setTimeout(resolve, 50));
  }
  throw new Error("condition not met in time");
}
