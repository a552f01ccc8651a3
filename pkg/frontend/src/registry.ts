/**
 * Tool registry view model: provenance badges, refresh-after-promotion, and
 * a stale indicator when a refresh fails (the previous list stays visible).
 */

import type { ApiClient, ToolInfo } from "./api.js";

export interface RegistryEntry {
  name: string;
  description: string;
  badge: "seeded" | "evolved";
}

export class RegistryView {
  private entries: RegistryEntry[] = [];
  private version = 0;
  stale = false;

  constructor(private readonly client: ApiClient) {}

  get tools(): RegistryEntry[] {
    return this.entries;
  }

  get kbVersion(): number {
    return this.version;
  }

  evolvedCount(): number {
    return this.entries.filter((entry) => entry.badge === "evolved").length;
  }

  /** Refresh from the service; on failure keep the old list and mark stale. */
  async refresh(): Promise<void> {
    try {
      const body = await this.client.fetchTools();
      this.entries = body.tools.map(toEntry);
      this.version = body.kb_version;
      this.stale = false;
    } catch {
      this.stale = true;
    }
  }
}

function toEntry(tool: ToolInfo): RegistryEntry {
  return {
    name: tool.name,
    description: tool.description,
    badge: tool.provenance === "evolved" ? "evolved" : "seeded",
  };
}
