/**
 * Browser chat client for the stone-needle gateway.
 *
 * Plain single-page app, no framework: every displayed fact comes from a
 * gateway response field. One turn is in flight at a time; the composer is
 * disabled while the gateway is working.
 */
const SESSION_STORAGE_KEY = "stone-needle-session";
export class GatewayClient {
    constructor(baseUrl) {
        this.baseUrl = baseUrl;
    }
    async asJson(reply) {
        if (!reply.ok) {
            let detail = `${reply.status}`;
            try {
                const body = await reply.json();
                if (body && typeof body.detail === "string")
                    detail = body.detail;
            }
            catch {
                /* non-JSON error body; keep the status text */
            }
            throw new Error(`gateway error: ${detail}`);
        }
        return reply.json();
    }
    async health() {
        try {
            const reply = await fetch(`${this.baseUrl}/v1/health`);
            return reply.ok;
        }
        catch {
            return false;
        }
    }
    async createSession() {
        const reply = await fetch(`${this.baseUrl}/v1/sessions`, { method: "POST" });
        return (await this.asJson(reply)).session_id;
    }
    async uploadResource(sessionId, data, mediaType) {
        const reply = await fetch(`${this.baseUrl}/v1/sessions/${sessionId}/resources`, {
            method: "POST",
            headers: { "Content-Type": mediaType },
            body: data,
        });
        return this.asJson(reply);
    }
    async postTurn(sessionId, text, resourceIds) {
        const reply = await fetch(`${this.baseUrl}/v1/sessions/${sessionId}/turns`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ text, resource_ids: resourceIds }),
        });
        return this.asJson(reply);
    }
    async transcript(sessionId) {
        const reply = await fetch(`${this.baseUrl}/v1/sessions/${sessionId}`);
        return this.asJson(reply);
    }
    resourceUrl(resourceId) {
        return `${this.baseUrl}/v1/resources/${resourceId}`;
    }
}
async function fileBytes(file) {
    if (typeof file.arrayBuffer === "function") {
        return file.arrayBuffer();
    }
    // Older DOM implementations: fall back to FileReader.
    return new Promise((resolve, reject) => {
        const reader = new FileReader();
        reader.onload = () => resolve(reader.result);
        reader.onerror = () => reject(reader.error);
        reader.readAsArrayBuffer(file);
    });
}
function previewKind(mediaType) {
    const top = mediaType.split("/", 1)[0];
    if (top === "image" || top === "audio" || top === "video")
        return top;
    return "other";
}
export class ChatApp {
    constructor(root, baseUrl) {
        this.root = root;
        this.sessionId = "";
        this.sending = false;
        this.client = new GatewayClient(baseUrl);
        this.buildSkeleton();
    }
    buildSkeleton() {
        this.root.innerHTML = `
      <div class="chat">
        <header class="chat-header">
          <h1>stone-needle</h1>
          <span class="status" data-testid="status"></span>
        </header>
        <main class="messages" data-testid="messages"></main>
        <form class="composer">
          <label class="attach-label" title="Attach image, audio, or video">
            &#128206;
            <input type="file" data-testid="composer-file" multiple
                   accept="image/*,audio/*,video/*" hidden />
          </label>
          <input type="text" data-testid="composer-input"
                 placeholder="Type a message" autocomplete="off" />
          <button type="submit" data-testid="composer-send">Send</button>
        </form>
      </div>`;
        this.messages = this.root.querySelector(".messages");
        this.input = this.root.querySelector('[data-testid="composer-input"]');
        this.fileInput = this.root.querySelector('[data-testid="composer-file"]');
        this.sendButton = this.root.querySelector('[data-testid="composer-send"]');
        this.status = this.root.querySelector('[data-testid="status"]');
        const form = this.root.querySelector(".composer");
        form.addEventListener("submit", (event) => {
            event.preventDefault();
            const files = Array.from(this.fileInput.files ?? []);
            void this.send(this.input.value, files);
        });
        this.fileInput.addEventListener("change", () => this.showPendingAttachments());
    }
    async start() {
        const healthy = await this.client.health();
        if (!healthy) {
            this.addErrorBubble("gateway unreachable");
            this.status.textContent = "offline";
            return;
        }
        const stored = this.readStoredSession();
        if (stored) {
            try {
                const doc = await this.client.transcript(stored);
                this.sessionId = stored;
                this.renderTranscript(doc);
                this.status.textContent = `session ${this.sessionId.slice(0, 8)}`;
                return;
            }
            catch {
                this.clearStoredSession();
            }
        }
        this.sessionId = await this.client.createSession();
        this.storeSession(this.sessionId);
        this.status.textContent = `session ${this.sessionId.slice(0, 8)}`;
    }
    readStoredSession() {
        try {
            return window.sessionStorage.getItem(SESSION_STORAGE_KEY);
        }
        catch {
            return null;
        }
    }
    storeSession(id) {
        try {
            window.sessionStorage.setItem(SESSION_STORAGE_KEY, id);
        }
        catch {
            /* storage unavailable: the session just will not survive a refresh */
        }
    }
    clearStoredSession() {
        try {
            window.sessionStorage.removeItem(SESSION_STORAGE_KEY);
        }
        catch {
            /* ignore */
        }
    }
    showPendingAttachments() {
        const names = Array.from(this.fileInput.files ?? []).map((f) => f.name);
        this.status.textContent = names.length ? `attached: ${names.join(", ")}` : "";
    }
    /** Upload any attachments, post the turn, and render both bubbles. */
    async send(text, files) {
        const trimmed = text.trim();
        if (this.sending || (!trimmed && files.length === 0) || !this.sessionId)
            return;
        this.sending = true;
        this.sendButton.disabled = true;
        this.input.disabled = true;
        try {
            const uploaded = [];
            for (const file of files) {
                const result = await this.client.uploadResource(this.sessionId, await fileBytes(file), file.type || "application/octet-stream");
                uploaded.push({ resource_id: result.resource_id, media_type: file.type });
            }
            this.addBubble("user", trimmed || null, uploaded, null);
            const reply = await this.client.postTurn(this.sessionId, trimmed || null, uploaded.map((u) => u.resource_id));
            this.addBubble("assistant", reply.text, reply.resources.map((r) => ({ resource_id: r.resource_id, media_type: r.media_type })), reply.trace);
            this.input.value = "";
            this.fileInput.value = "";
            this.status.textContent = `session ${this.sessionId.slice(0, 8)}`;
        }
        catch (error) {
            this.addErrorBubble(error instanceof Error ? error.message : String(error));
        }
        finally {
            this.sending = false;
            this.sendButton.disabled = false;
            this.input.disabled = false;
        }
    }
    renderTranscript(doc) {
        this.messages.innerHTML = "";
        for (const turn of doc.turns) {
            this.addBubble("user", turn.query.text, turn.query.resources.map((r) => ({ resource_id: r.id, media_type: r.media_type })), null);
            this.addBubble("assistant", turn.response.text, turn.response.resources.map((r) => ({ resource_id: r.id, media_type: r.media_type })), turn.response.trace);
        }
    }
    addBubble(role, text, resources, trace) {
        const bubble = document.createElement("div");
        bubble.className = `bubble ${role}`;
        bubble.dataset.role = role;
        if (text) {
            const p = document.createElement("p");
            p.className = "bubble-text";
            p.textContent = text;
            bubble.appendChild(p);
        }
        for (const resource of resources) {
            bubble.appendChild(this.resourceElement(resource.resource_id, resource.media_type));
        }
        if (trace) {
            bubble.appendChild(this.traceElement(trace));
        }
        this.messages.appendChild(bubble);
        this.messages.scrollTop = this.messages.scrollHeight;
    }
    resourceElement(resourceId, mediaType) {
        const url = this.client.resourceUrl(resourceId);
        const wrapper = document.createElement("div");
        wrapper.className = "resource";
        wrapper.dataset.resourceId = resourceId;
        const kind = previewKind(mediaType);
        if (kind === "image") {
            const img = document.createElement("img");
            img.src = url;
            img.alt = `image resource ${resourceId.slice(0, 12)}`;
            img.className = "preview-image";
            wrapper.appendChild(img);
        }
        else if (kind === "audio") {
            const audio = document.createElement("audio");
            audio.controls = true;
            audio.src = url;
            wrapper.appendChild(audio);
        }
        else if (kind === "video") {
            const video = document.createElement("video");
            video.controls = true;
            video.src = url;
            wrapper.appendChild(video);
        }
        const link = document.createElement("a");
        link.href = url;
        link.textContent = `${mediaType} · ${resourceId.slice(0, 12)}`;
        link.className = "resource-link";
        wrapper.appendChild(link);
        return wrapper;
    }
    traceElement(trace) {
        const details = document.createElement("details");
        details.className = "trace";
        const summary = document.createElement("summary");
        const selected = trace.selected ?? "none";
        const top = trace.selected !== null ? trace.scores[trace.selected] : null;
        summary.textContent =
            top !== null ? `routed: ${selected} (${top.toFixed(2)})` : `routed: ${selected}`;
        details.appendChild(summary);
        const list = document.createElement("ul");
        list.className = "trace-scores";
        for (const [model, score] of Object.entries(trace.scores)) {
            const item = document.createElement("li");
            item.textContent = `${model}: ${score.toFixed(4)}`;
            list.appendChild(item);
        }
        details.appendChild(list);
        if (trace.fallback_turn_index !== null && trace.fallback_turn_index !== undefined) {
            const fallback = document.createElement("p");
            fallback.className = "trace-fallback";
            fallback.textContent = `used attachment from turn ${trace.fallback_turn_index}`;
            details.appendChild(fallback);
        }
        return details;
    }
    addErrorBubble(message) {
        const bubble = document.createElement("div");
        bubble.className = "bubble error";
        bubble.dataset.role = "error";
        bubble.textContent = message;
        this.messages.appendChild(bubble);
    }
    /** Visible turn texts, for comparing the DOM against the API transcript. */
    visibleTexts() {
        return Array.from(this.messages.querySelectorAll(".bubble")).map((el) => ({
            role: el.dataset.role ?? "",
            text: el.querySelector(".bubble-text")?.textContent ?? "",
        }));
    }
}
export async function initChatUi(root, baseUrl) {
    const app = new ChatApp(root, baseUrl);
    await app.start();
    return app;
}
// Auto-start when loaded as a page script; tests call initChatUi themselves.
if (typeof document !== "undefined") {
    const mount = document.getElementById("chat-app");
    if (mount) {
        void initChatUi(mount, "");
    }
}
