// Mode-toggle logic: optimistic badge with acknowledgement confirmation and
// timeout revert. Pure state machine (clock injected) so the contract is
// testable without a socket.

import type { AckMessage, TelemetryFrame } from "./protocol";

// matches the bridge's determinant guard for the energy-saving mode
const SPEED_GUARD = 1e-6;

export interface ToggleView {
  displayed: 0 | 1;
  pending: boolean;
  disabled: boolean;
  warning: string | null;
}

export class ModeToggle {
  private send: (sigma: 0 | 1) => void;
  private timeoutMs: number;
  private confirmed: 0 | 1 = 1;
  private target: 0 | 1 | null = null;
  private deadline = 0;
  private warning: string | null = null;
  private lastFrame: TelemetryFrame | null = null;

  constructor(send: (sigma: 0 | 1) => void, timeoutMs = 1500) {
    this.send = send;
    this.timeoutMs = timeoutMs;
  }

  /** Operator clicked the toggle; commands are sent immediately and the
   * badge goes optimistic. A second click before confirmation just retargets
   * (commands are serialized; the bridge applies the last one per boundary). */
  click(now: number): void {
    if (this.view().disabled) {
      return;
    }
    const current = this.target ?? this.confirmed;
    const next: 0 | 1 = current === 1 ? 0 : 1;
    this.target = next;
    this.deadline = now + this.timeoutMs;
    this.warning = null;
    this.send(next);
  }

  onFrame(frame: TelemetryFrame, now: number): void {
    this.lastFrame = frame;
    this.confirmed = frame.sigma;
    if (this.target !== null && frame.sigma === this.target) {
      this.target = null; // telemetry reflects the commanded mode
    }
    void now;
  }

  onAck(ack: AckMessage): void {
    if (ack.kind !== "set_sigma") {
      return;
    }
    if (!ack.applied) {
      this.target = null; // refused (singular): revert the optimistic badge
      this.warning = ack.reason || "mode change refused";
    }
  }

  /** Call periodically; reverts the optimistic state when no confirmation
   * arrived in time. */
  tick(now: number): void {
    if (this.target !== null && now >= this.deadline) {
      this.target = null;
      this.warning = "no acknowledgement from the bridge; mode unchanged - retry";
    }
  }

  view(): ToggleView {
    const frame = this.lastFrame;
    const displayed = this.target ?? this.confirmed;
    const wouldBeEnergySaving = (this.target ?? this.confirmed) === 1;
    const disabled =
      frame !== null &&
      (frame.singular_flag ||
        (wouldBeEnergySaving && Math.abs(frame.v1) <= SPEED_GUARD));
    return {
      displayed,
      pending: this.target !== null,
      disabled: Boolean(disabled),
      warning: this.warning,
    };
  }

  clearWarning(): void {
    this.warning = null;
  }
}
