import type { ImageJson, ReportJson, RulesetJson } from "../../src/api.js";

export function makeImage(id: string, attributes: string[] = [], types: string[] = []): ImageJson {
  return {
    id,
    uri: `mem://${id}`,
    objects: types.map((type, i) => ({
      type,
      bbox: [i * 20, 0, 10, 10] as [number, number, number, number],
      confidence: 1.0,
    })),
    attributes,
  };
}

/** One rule per class, one attribute clause each: the smallest useful shape. */
export function tinyRuleset(): RulesetJson {
  return {
    generation: 1,
    rules: [
      {
        class: "kitchen",
        clauses: [
          {
            literals: [{ kind: "has_attribute", args: ["tiled"], negated: false }],
            status: "normal",
            impure: false,
          },
          {
            literals: [
              { kind: "count_at_least", args: ["kettle", 1], negated: false },
              { kind: "has_attribute", args: ["carpet"], negated: true },
            ],
            status: "normal",
            impure: false,
          },
        ],
      },
      {
        class: "office",
        clauses: [
          {
            literals: [{ kind: "has_attribute", args: ["carpet"], negated: false }],
            status: "normal",
            impure: false,
          },
        ],
      },
    ],
    banned: {},
  };
}

export function sampleReport(): ReportJson {
  return {
    overall: 0.74,
    per_class: {
      kitchen: { accuracy: 0.8, correct: 4, total: 5 },
      office: { accuracy: 0.68, correct: 17, total: 25 },
    },
    generation: 1,
  };
}

/** Let queued promise callbacks (optimistic edits, reconciliation) settle. */
export async function flush(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
  await new Promise((resolve) => setTimeout(resolve, 0));
}
