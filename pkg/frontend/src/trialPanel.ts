/**
 * Trial panel state machine: 8 labelled response buttons, trial timer, and
 * the training free-play mode with its 10-minute soft timer.
 *
 * Button labels and glyphs are deliberately distinct, in particular for
 * robot_error vs connection_lost, which similar labels made easy to mix up.
 */

import { ClockSync } from "./clockSync.js";

export interface EventButton {
  event: string;
  label: string;
  glyph: string;
}

export const EVENT_BUTTONS: EventButton[] = [
  { event: "uninjured_person", label: "Person OK", glyph: "♥" }, // heart
  { event: "injured_person", label: "Person Injured", glyph: "✙" }, // cross
  { event: "unconscious_person", label: "Person Unresponsive", glyph: "✹" }, // burst
  { event: "fire", label: "Fire", glyph: "▲" }, // rising triangle
  { event: "low_oxygen", label: "Low Oxygen", glyph: "⎋" }, // spiral-ish
  { event: "biohazard", label: "Biohazard", glyph: "☣" }, // biohazard sign
  { event: "robot_error", label: "Robot Fault", glyph: "⚙" }, // gear
  { event: "connection_lost", label: "Signal Lost", glyph: "✕" }, // big X
];

export const TRAINING_CAP_MS = 10 * 60_000;

export type PanelMode = "idle" | "training" | "trial" | "finished";

export interface ResponseSender {
  (chosen: string, timestamps: { client_t_ms: number; rtt_ms: number }): void;
}

export interface TriggerSender {
  (event: string): void;
}

export class TrialPanelModel {
  mode: PanelMode = "idle";
  loadTag: string = "none";
  trainingCapReached = false;
  responsesSent = 0;

  private startedAt = 0;
  private durationMs = 0;

  constructor(
    private readonly sendResponse: ResponseSender,
    private readonly sendTrigger: TriggerSender,
    private readonly clock: ClockSync,
    private readonly nowMs: () => number = () => Date.now(),
  ) {}

  get buttonsEnabled(): boolean {
    return this.mode === "training" || this.mode === "trial";
  }

  startTraining(): void {
    this.mode = "training";
    this.trainingCapReached = false;
    this.startedAt = this.nowMs();
  }

  startTrial(durationMs: number, loadTag: string): void {
    this.mode = "trial";
    this.loadTag = loadTag;
    this.durationMs = durationMs;
    this.startedAt = this.nowMs();
    this.responsesSent = 0;
  }

  finish(): void {
    this.mode = "finished";
  }

  /** Milliseconds left in the trial (0 outside trials). */
  remainingMs(): number {
    if (this.mode !== "trial") return 0;
    return Math.max(0, this.durationMs - (this.nowMs() - this.startedAt));
  }

  elapsedMs(): number {
    return this.mode === "idle" ? 0 : this.nowMs() - this.startedAt;
  }

  /** Called on a timer; flips states that depend on elapsed time. */
  tick(): void {
    if (this.mode === "trial" && this.remainingMs() <= 0) {
      this.finish();
    }
    if (this.mode === "training" && this.elapsedMs() >= TRAINING_CAP_MS) {
      this.trainingCapReached = true; // soft cap: shown, never a lockout
    }
  }

  /** A button press: trigger in training, timestamped response in a trial. */
  press(event: string): void {
    if (!this.buttonsEnabled) return;
    if (this.mode === "training") {
      this.sendTrigger(event);
      return;
    }
    this.sendResponse(event, this.clock.responseTimestamps(this.nowMs()));
    this.responsesSent += 1;
  }
}
