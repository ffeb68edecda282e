/**
 * Editor round-trip: rulesets served over the mock contract render into the
 * block tree, serialize back out of the DOM, and re-parse to trees with
 * identical canonical forms, statuses, and ban registries.
 */

import { describe, expect, it } from "vitest";

import { SessionClient } from "../src/api.js";
import { renderRuleEditor } from "../src/editor.js";
import { clauseCanonical, parseRuleset, rulesetsEquivalent } from "../src/rules.js";
import { MockServer } from "./helpers/mockServer.js";
import { mulberry32, randomRuleset } from "./helpers/random.js";

describe("rule editor round-trip", () => {
  it("re-parses 100 randomized rulesets to canonical-form-equal trees", async () => {
    for (let seed = 0; seed < 100; seed++) {
      const rng = mulberry32(seed * 2654435761 + 1);
      const ruleset = randomRuleset(rng);
      const mock = new MockServer({
        classes: ruleset.rules.map((r) => r.class),
        ruleset,
      });
      const client = new SessionClient("http://mock", mock.fetch);

      const served = await client.getRules(mock.sessionId);
      const container = document.createElement("div");
      const editor = renderRuleEditor(container, {
        ruleset: served,
        importanceRanked: [],
        onEdit: (edit) => client.editRules(mock.sessionId, edit),
      });

      const serialized = editor.serialize();
      const reparsed = parseRuleset(serialized);
      const original = parseRuleset(served);
      expect(
        rulesetsEquivalent(reparsed, original),
        `seed ${seed}: round-trip drifted`,
      ).toBe(true);

      // the serialized document is something the service accepts back
      const preview = await client.previewRules(mock.sessionId, serialized);
      expect(preview.stats.total).toBeGreaterThanOrEqual(0);
    }
  });

  it("keeps canonical forms stable under literal reordering", () => {
    const rng = mulberry32(7);
    for (let i = 0; i < 50; i++) {
      const ruleset = randomRuleset(rng);
      for (const rule of ruleset.rules) {
        for (const clause of rule.clauses) {
          const shuffled = [...clause.literals].reverse();
          expect(clauseCanonical(shuffled)).toBe(clauseCanonical(clause.literals));
        }
      }
    }
  });

  it("survives a serialize after real edits against the mock service", async () => {
    const rng = mulberry32(99);
    const ruleset = randomRuleset(rng);
    while (ruleset.rules[0]!.clauses.length === 0 || ruleset.rules[0]!.clauses[0]!.status !== "normal") {
      Object.assign(ruleset, randomRuleset(rng));
    }
    const mock = new MockServer({ classes: ruleset.rules.map((r) => r.class), ruleset });
    const client = new SessionClient("http://mock", mock.fetch);
    const container = document.createElement("div");
    const editor = renderRuleEditor(container, {
      ruleset: await client.getRules(mock.sessionId),
      importanceRanked: [],
      onEdit: (edit) => client.editRules(mock.sessionId, edit),
    });

    const cls = ruleset.rules[0]!.class;
    await client.editRules(mock.sessionId, { op: "lock", class: cls, clause_index: 0 });
    const fresh = await client.getRules(mock.sessionId);
    const editor2 = renderRuleEditor(document.createElement("div"), {
      ruleset: fresh,
      importanceRanked: [],
      onEdit: (edit) => client.editRules(mock.sessionId, edit),
    });
    expect(rulesetsEquivalent(parseRuleset(editor2.serialize()), parseRuleset(fresh))).toBe(true);
    expect(editor.serialize().generation).toBe(ruleset.generation);
  });
});
