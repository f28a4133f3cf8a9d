// Early-stopping state machine: training stops when validation loss has not
// improved for `patience` consecutive epochs, or when `maxEpochs` is
// reached; the best epoch's weights are what training restores.

export type StopReason = "patience" | "max_epochs" | null;

export interface EpochDecision {
  epoch: number;
  improved: boolean;
  stop: boolean;
  reason: StopReason;
}

export class EarlyStopping {
  readonly patience: number;
  readonly maxEpochs: number;
  epoch = 0;
  bestEpoch = 0;
  bestLoss = Number.POSITIVE_INFINITY;

  constructor(patience: number, maxEpochs: number) {
    if (patience < 0 || maxEpochs < 0) throw new Error("patience and maxEpochs must be >= 0");
    this.patience = patience;
    this.maxEpochs = maxEpochs;
  }

  /** Record one epoch's validation loss and decide whether to keep training. */
  record(valLoss: number): EpochDecision {
    if (this.epoch >= this.maxEpochs) throw new Error("already past maxEpochs");
    this.epoch += 1;
    const improved = valLoss < this.bestLoss;
    if (improved) {
      this.bestLoss = valLoss;
      this.bestEpoch = this.epoch;
    }
    let reason: StopReason = null;
    if (this.epoch - this.bestEpoch >= this.patience) reason = "patience";
    if (this.epoch >= this.maxEpochs) reason = reason ?? "max_epochs";
    return { epoch: this.epoch, improved, stop: reason !== null, reason };
  }
}
