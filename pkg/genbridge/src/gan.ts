/**
 * Conditional-GAN-style tabular synthesizer on tfjs.
 *
 * A small generator/discriminator MLP pair trained adversarially on the
 * (standardized) table.  Continuous columns are de-standardized on the way
 * out; binary columns pass through a sigmoid and are thresholded at 0.5,
 * so emitted rows respect binary domains by construction.  Latent draws
 * come from the job's seeded stream, making sampling reproducible for
 * fixed trained weights (training itself uses the backend's initializers).
 */

import * as tf from "@tensorflow/tfjs";

import { Rng } from "./rng.js";
import { Schema } from "./schema.js";

const LATENT_DIM = 8;
const HIDDEN = 32;

export class TabularGan {
  private generator: tf.LayersModel | null = null;
  private means: number[] = [];
  private scales: number[] = [];

  constructor(
    private readonly schema: Schema,
    private readonly covariatesOnly: boolean,
  ) {}

  private width(): number {
    const d = this.schema.filter((c) => c.role === "covariate").length;
    return this.covariatesOnly ? d : this.schema.length;
  }

  private standardize(rows: number[][]): number[][] {
    const width = this.width();
    this.means = Array(width).fill(0);
    this.scales = Array(width).fill(1);
    for (let j = 0; j < width; j++) {
      if (this.schema[j].kind !== "continuous") continue;
      const column = rows.map((r) => r[j]);
      const mean = column.reduce((a, b) => a + b, 0) / column.length;
      const sd = Math.sqrt(
        column.reduce((a, b) => a + (b - mean) ** 2, 0) / Math.max(column.length - 1, 1),
      );
      this.means[j] = mean;
      this.scales[j] = sd > 0 ? sd : 1;
    }
    return rows.map((r) =>
      r.slice(0, width).map((v, j) => (v - this.means[j]) / this.scales[j]),
    );
  }

  async fit(rows: number[][], epochs: number, batchSize: number): Promise<void> {
    const width = this.width();
    const data = this.standardize(rows);

    const generator = tf.sequential({
      layers: [
        tf.layers.dense({ inputShape: [LATENT_DIM], units: HIDDEN, activation: "relu" }),
        tf.layers.dense({ units: width, activation: "linear" }),
      ],
    });
    const discriminator = tf.sequential({
      layers: [
        tf.layers.dense({ inputShape: [width], units: HIDDEN, activation: "relu" }),
        tf.layers.dense({ units: 1, activation: "sigmoid" }),
      ],
    });
    discriminator.compile({ optimizer: tf.train.adam(1e-3), loss: "binaryCrossentropy" });
    const stack = tf.sequential();
    stack.add(generator);
    discriminator.trainable = false;
    stack.add(discriminator);
    stack.compile({ optimizer: tf.train.adam(1e-3), loss: "binaryCrossentropy" });

    const steps = Math.max(1, Math.floor(data.length / batchSize));
    for (let epoch = 0; epoch < Math.max(1, epochs); epoch++) {
      for (let step = 0; step < steps; step++) {
        const realBatch = tf.tensor2d(
          Array.from({ length: batchSize }, () => data[Math.floor(Math.random() * data.length)]),
        );
        const noise = tf.randomNormal([batchSize, LATENT_DIM]);
        const fakeBatch = generator.predict(noise) as tf.Tensor2D;

        discriminator.trainable = true;
        await discriminator.trainOnBatch(realBatch, tf.ones([batchSize, 1]));
        await discriminator.trainOnBatch(fakeBatch, tf.zeros([batchSize, 1]));
        discriminator.trainable = false;
        const trick = tf.randomNormal([batchSize, LATENT_DIM]);
        await stack.trainOnBatch(trick, tf.ones([batchSize, 1]));
        tf.dispose([realBatch, noise, fakeBatch, trick]);
      }
    }
    this.generator = generator;
  }

  /** One sampled row, or null before fitting; domains enforced on the way out. */
  sampleRow(rng: Rng): number[] | null {
    if (!this.generator) return null;
    const z = tf.tensor2d([Array.from({ length: LATENT_DIM }, () => rng.normal())]);
    const out = this.generator.predict(z) as tf.Tensor2D;
    const raw = Array.from(out.dataSync());
    tf.dispose([z, out]);
    const row = raw.map((v, j) => {
      if (this.schema[j].kind === "binary") {
        return 1 / (1 + Math.exp(-v)) >= 0.5 ? 1 : 0;
      }
      return v * this.scales[j] + this.means[j];
    });
    return row.every((v) => Number.isFinite(v)) ? row : null;
  }
}
