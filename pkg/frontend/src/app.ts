/**
 * Chat console controller: holds the conversation, the live pipeline
 * timeline, and the registry view. DOM-free so the UI contract is testable
 * against a mock server; `bootstrap` does the browser wiring.
 */

import { ApiClient, type PipelineEvent } from "./api.js";
import { RegistryView } from "./registry.js";
import { streamEvents } from "./sse.js";
import { Timeline } from "./timeline.js";

export interface ChatMessage {
  sender: "user" | "assistant" | "system";
  text: string;
}

export class ChatController {
  readonly messages: ChatMessage[] = [];
  readonly timeline = new Timeline();
  readonly registry: RegistryView;
  errorBanner: string | null = null;
  pendingInput = ""; // preserved verbatim when a send fails
  private sessionId: string | null = null;
  private updateQueue: Promise<void> = Promise.resolve();

  constructor(
    private readonly client: ApiClient,
    private readonly onChange: () => void = () => {}
  ) {
    this.registry = new RegistryView(client);
  }

  /** Serialize all state updates through one queue. */
  private enqueue(update: () => void | Promise<void>): Promise<void> {
    this.updateQueue = this.updateQueue.then(async () => {
      await update();
      this.onChange();
    });
    return this.updateQueue;
  }

  async connect(): Promise<void> {
    this.sessionId = await this.client.createSession();
    await this.registry.refresh();
    this.onChange();
  }

  async send(text: string): Promise<void> {
    if (this.sessionId === null) throw new Error("not connected");
    const sessionId = this.sessionId;
    const after = this.timeline.lastSequence;
    await this.enqueue(() => {
      this.messages.push({ sender: "user", text });
      this.errorBanner = null;
    });

    let reply: string;
    try {
      reply = (await this.client.sendMessage(sessionId, text)).reply;
    } catch (error) {
      await this.enqueue(() => {
        this.errorBanner = `request failed: ${String(error)}`;
        this.pendingInput = text; // input preserved for retry
        this.messages.pop(); // message never reached the server
      });
      return;
    }

    // drain the event stream for this turn before appending the reply
    await streamEvents(this.client.eventsUrl(sessionId, after), {
      onFrame: (frame) => {
        const event = JSON.parse(frame.data) as PipelineEvent;
        void this.enqueue(() => {
          this.timeline.add(event);
          if (event.kind === "promoted") {
            return this.registry.refresh();
          }
        });
      },
      onError: () => {
        void this.enqueue(() => {
          this.errorBanner = "event stream dropped; timeline may be incomplete";
        });
      },
    });
    await this.enqueue(() => {
      this.messages.push({ sender: "assistant", text: reply });
      this.pendingInput = "";
    });
  }
}

/** Browser entry point; no-op outside a DOM environment. */
export function bootstrap(baseUrl: string): ChatController | null {
  if (typeof document === "undefined") return null;
  const client = new ApiClient(baseUrl);
  const controller = new ChatController(client, () => render(controller));
  void controller.connect();

  const form = document.getElementById("chat-form") as HTMLFormElement | null;
  const input = document.getElementById("chat-input") as HTMLInputElement | null;
  form?.addEventListener("submit", (event) => {
    event.preventDefault();
    if (input === null || input.value.trim() === "") return;
    const text = input.value;
    input.value = "";
    void controller.send(text).then(() => {
      if (input !== null && controller.pendingInput !== "") {
        input.value = controller.pendingInput;
      }
    });
  });
  return controller;
}

function render(controller: ChatController): void {
  setList("messages", controller.messages.map((m) => `${m.sender}: ${m.text}`));
  setList("timeline", controller.timeline.renderLines());
  setList(
    "tools",
    controller.registry.tools.map((t) => `${t.name} [${t.badge}] ${t.description}`)
  );
  const banner = document.getElementById("error-banner");
  if (banner !== null) {
    banner.textContent = controller.errorBanner ?? "";
    banner.toggleAttribute("hidden", controller.errorBanner === null);
  }
  const staleBadge = document.getElementById("registry-stale");
  staleBadge?.toggleAttribute("hidden", !controller.registry.stale);
}

function setList(id: string, lines: string[]): void {
  const node = document.getElementById(id);
  if (node === null) return;
  node.replaceChildren(
    ...lines.map((line) => {
      const item = document.createElement("li");
      item.textContent = line;
      return item;
    })
  );
}
