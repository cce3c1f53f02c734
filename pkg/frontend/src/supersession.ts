/**
 * Latest-request-wins gate. Every request takes a ticket; when a response
 * lands, it is applied only if no newer ticket has been issued since. Stale
 * responses are discarded silently.
 */
export class LatestOnly {
  private current = 0;

  /** Mark the start of a new request; newer tickets invalidate older ones. */
  take(): number {
    this.current += 1;
    return this.current;
  }

  /** True when `ticket` still names the newest request. */
  isCurrent(ticket: number): boolean {
    return ticket === this.current;
  }
}
