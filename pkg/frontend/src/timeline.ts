/**
 * Pipeline event timeline: order-preserving under out-of-order delivery,
 * deduplicating on sequence number, grouped by iteration so the refinement
 * loop structure is visible.
 */

import type { PipelineEvent } from "./api.js";

export interface TimelineGroup {
  iteration: number | null; // null groups dispatch/response bookends
  events: PipelineEvent[];
}

const KIND_LABELS: Record<string, string> = {
  dispatched: "dispatched",
  tdd_generated: "requirement tests generated",
  function_generated: "function generated",
  intermediate_verdict: "intermediate adjudication",
  unit_tests_generated: "unit tests generated",
  final_verdict: "final adjudication",
  promoted: "tool promoted",
  responded: "reply sent",
  failed: "failed",
};

export class Timeline {
  private bySequence = new Map<number, PipelineEvent>();

  /** Insert an event; duplicates (same sequence) are ignored. */
  add(event: PipelineEvent): void {
    if (!this.bySequence.has(event.sequence)) {
      this.bySequence.set(event.sequence, event);
    }
  }

  /** Events sorted by sequence number regardless of arrival order. */
  get events(): PipelineEvent[] {
    return [...this.bySequence.values()].sort((a, b) => a.sequence - b.sequence);
  }

  get lastSequence(): number {
    let last = 0;
    for (const sequence of this.bySequence.keys()) {
      if (sequence > last) last = sequence;
    }
    return last;
  }

  /** True once a promoted event has arrived; registry views refresh on it. */
  get sawPromotion(): boolean {
    return this.events.some((e) => e.kind === "promoted");
  }

  /** Group consecutive events by their payload iteration number. */
  groups(): TimelineGroup[] {
    const groups: TimelineGroup[] = [];
    for (const event of this.events) {
      const iteration =
        typeof event.payload.iteration === "number" ? event.payload.iteration : null;
      const current = groups[groups.length - 1];
      if (current !== undefined && current.iteration === iteration) {
        current.events.push(event);
      } else {
        groups.push({ iteration, events: [event] });
      }
    }
    return groups;
  }

  /** One plain-text line per event, in sequence order. */
  renderLines(): string[] {
    return this.events.map((event) => {
      const label = KIND_LABELS[event.kind] ?? event.kind;
      const decision = event.payload.decision;
      const suffix = typeof decision === "string" ? ` (${decision})` : "";
      return `#${event.sequence} ${label}${suffix}`;
    });
  }

  clear(): void {
    this.bySequence.clear();
  }
}
