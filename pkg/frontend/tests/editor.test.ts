import { describe, expect, it } from "vitest";

import { ApiError, SessionClient } from "../src/api.js";
import { renderRuleEditor, RuleEditorView } from "../src/editor.js";
import { flush, tinyRuleset } from "./helpers/fixtures.js";
import { MockServer } from "./helpers/mockServer.js";

function setup(importanceRanked = ["kettle", "monitor", "table"]) {
  const ruleset = tinyRuleset();
  const mock = new MockServer({ classes: ["kitchen", "office"], ruleset });
  const client = new SessionClient("http://mock", mock.fetch);
  const editor = renderRuleEditor(document.createElement("div"), {
    ruleset,
    importanceRanked,
    attributes: ["tiled", "carpet"],
    onEdit: (edit) => client.editRules(mock.sessionId, edit),
  });
  return { mock, editor };
}

function kitchenClause(editor: RuleEditorView, index = 0): HTMLElement {
  const panel = editor.element.querySelector<HTMLElement>('.rule-panel[data-class="kitchen"]')!;
  return panel.querySelectorAll<HTMLElement>(".clause-block")[index]!;
}

describe("literal interactions", () => {
  it("negation toggle emits edit_literal with the flipped polarity", async () => {
    const { mock, editor } = setup();
    kitchenClause(editor).querySelector<HTMLButtonElement>(".negate-literal")!.click();
    await flush();

    const sent = mock.requests.find((r) => r.path.endsWith("/rules/edit"));
    expect(sent!.body).toEqual({
      edit: {
        op: "edit_literal",
        class: "kitchen",
        clause_index: 0,
        literal_index: 0,
        literal: { kind: "has_attribute", args: ["tiled"], negated: true },
      },
    });
    const lit = kitchenClause(editor).querySelector<HTMLElement>(".literal-block")!;
    expect(lit.dataset.negated).toBe("true");
    expect(lit.classList.contains("negated")).toBe(true);
    expect(lit.querySelector(".literal-text")!.textContent).toBe("not attr(tiled)");
  });

  it("removing a literal from a two-literal clause goes through", async () => {
    const { mock, editor } = setup();
    kitchenClause(editor, 1).querySelectorAll<HTMLButtonElement>(".remove-literal")[1]!.click();
    await flush();
    expect(mock.requests.some((r) => r.path.endsWith("/rules/edit"))).toBe(true);
    expect(kitchenClause(editor, 1).querySelectorAll(".literal-block").length).toBe(1);
  });

  it("deleting the last literal shows an inline error and sends nothing", async () => {
    const { mock, editor } = setup();
    kitchenClause(editor, 0).querySelector<HTMLButtonElement>(".remove-literal")!.click();
    await flush();

    expect(mock.requests).toHaveLength(0);
    const error = editor.element.querySelector<HTMLElement>(".editor-error")!;
    expect(error.hidden).toBe(false);
    expect(error.textContent).toContain("at least one predicate");
    expect(kitchenClause(editor, 0).querySelectorAll(".literal-block").length).toBe(1);
  });
});

describe("palette", () => {
  it("orders the value dropdown by importance rank and filters by search", () => {
    const { editor } = setup(["kettle", "monitor", "table"]);
    const options = () =>
      [...editor.element.querySelectorAll<HTMLOptionElement>(".palette-value option")].map(
        (o) => o.value,
      );
    expect(options()).toEqual(["kettle", "monitor", "table"]);

    const search = editor.element.querySelector<HTMLInputElement>(".palette-search")!;
    search.value = "ta";
    search.dispatchEvent(new Event("input", { bubbles: true }));
    expect(options()).toEqual(["table"]);
  });

  it("adds an OR clause built from the palette", async () => {
    const { mock, editor } = setup();
    const kind = editor.element.querySelector<HTMLSelectElement>(".palette-kind")!;
    kind.value = "count_at_least";
    const count = editor.element.querySelector<HTMLInputElement>(".palette-count")!;
    count.value = "3";
    editor.element.querySelector<HTMLButtonElement>(".add-clause")!.click();
    await flush();

    const sent = mock.requests.find((r) => r.path.endsWith("/rules/edit"));
    expect(sent!.body).toEqual({
      edit: {
        op: "add_clause",
        class: "kitchen",
        clause: {
          literals: [{ kind: "count_at_least", args: ["kettle", 3], negated: false }],
          status: "normal",
          impure: false,
        },
      },
    });
    expect(kitchenClause(editor, 2).querySelector(".literal-text")!.textContent).toBe(
      "count(kettle)>=3",
    );
  });

  it("adds a predicate to an existing clause", async () => {
    const { mock, editor } = setup();
    const kind = editor.element.querySelector<HTMLSelectElement>(".palette-kind")!;
    kind.value = "has_attribute";
    const attr = editor.element.querySelector<HTMLInputElement>(".palette-attr")!;
    attr.value = "sunlit";
    kitchenClause(editor, 0).querySelector<HTMLButtonElement>(".add-literal")!.click();
    await flush();

    const sent = mock.requests.find((r) => r.path.endsWith("/rules/edit"));
    expect(sent!.body).toEqual({
      edit: {
        op: "add_literal",
        class: "kitchen",
        clause_index: 0,
        literal: { kind: "has_attribute", args: ["sunlit"], negated: false },
      },
    });
    expect(kitchenClause(editor, 0).querySelectorAll(".literal-block")).toHaveLength(2);
  });
});

describe("optimistic reconciliation", () => {
  it("reverts the tree and surfaces the message when the service rejects", async () => {
    const { mock, editor } = setup();
    mock.rejectNextEdit = { status: 409, code: "conflict", message: "another writer holds the session" };
    kitchenClause(editor).querySelector<HTMLButtonElement>(".lock-toggle")!.click();
    await flush();

    expect(kitchenClause(editor).dataset.status).toBe("normal");
    const error = editor.element.querySelector<HTMLElement>(".editor-error")!;
    expect(error.hidden).toBe(false);
    expect(error.textContent).toContain("another writer holds the session");
  });

  it("reconciles to the acknowledged ruleset from the edit response", async () => {
    const { mock, editor } = setup();
    kitchenClause(editor).querySelector<HTMLButtonElement>(".ban-clause")!.click();
    await flush();
    expect(editor.serialize().banned).toEqual(mock.currentRuleset().banned);
  });

  it("moveLiteral refuses to empty the source clause", async () => {
    const { mock, editor } = setup();
    await editor.moveLiteral("kitchen", 0, 0, 1);
    expect(mock.requests).toHaveLength(0);
    expect(editor.element.querySelector<HTMLElement>(".editor-error")!.hidden).toBe(false);
  });

  it("moveLiteral emits a remove/add pair for a legal drag", async () => {
    const { mock, editor } = setup();
    await editor.moveLiteral("kitchen", 1, 1, 0);
    await flush();
    const ops = mock.requests
      .filter((r) => r.path.endsWith("/rules/edit"))
      .map((r) => (r.body as { edit: { op: string } }).edit.op);
    expect(ops).toEqual(["remove_literal", "add_literal"]);
    expect(kitchenClause(editor, 0).querySelectorAll(".literal-block")).toHaveLength(2);
    expect(kitchenClause(editor, 1).querySelectorAll(".literal-block")).toHaveLength(1);
  });
});

describe("class tabs", () => {
  it("switches the visible panel without touching the others' content", () => {
    const { editor } = setup();
    const officeTab = editor.element.querySelector<HTMLButtonElement>(
      '.class-tab[data-class="office"]',
    )!;
    officeTab.click();
    const kitchenPanel = editor.element.querySelector<HTMLElement>(
      '.rule-panel[data-class="kitchen"]',
    )!;
    const officePanel = editor.element.querySelector<HTMLElement>(
      '.rule-panel[data-class="office"]',
    )!;
    expect(kitchenPanel.hidden).toBe(true);
    expect(officePanel.hidden).toBe(false);
    expect(editor.serialize().rules).toHaveLength(2);
  });
});

describe("ApiError", () => {
  it("carries the service envelope through to the caller", async () => {
    const { mock } = setup();
    const client = new SessionClient("http://mock", mock.fetch);
    mock.rejectNextEdit = { status: 400, code: "edit_error", message: "cannot edit a locked clause; unlock it first" };
    try {
      await client.editRules(mock.sessionId, { op: "lock", class: "kitchen", clause_index: 0 });
      expect.unreachable("edit should have been rejected");
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      const apiErr = err as ApiError;
      expect(apiErr.status).toBe(400);
      expect(apiErr.code).toBe("edit_error");
      expect(apiErr.detail).toBe("EditError");
    }
  });
});
