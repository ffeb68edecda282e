/**
 * Block-based rule editor.
 *
 * Renders a ruleset as class tabs of OR-clause blocks built from literal
 * blocks. Every user interaction is expressed as a RuleEdit payload handed
 * to the `onEdit` callback (the caller wires it to PUT /rules/edit); the
 * tree updates optimistically and reconciles with the acknowledged ruleset
 * from the response, reverting if the service rejects the edit. serialize()
 * reads the ruleset back out of the DOM, not from a shadow model, so what
 * you see is literally what you get.
 */

import type { EditResponseJson, LiteralJson, RuleEditJson, RulesetJson } from "./api.js";
import {
  applyEditLocally,
  literalCanonical,
  LocalEditError,
  parseRuleset,
  serializeRuleset,
  type LiteralBlock,
  type RuleBlockModel,
} from "./rules.js";

/** Status chrome: locked clauses gray their OR block, banned ones get a grid. */
export const EDITOR_STYLES = `
.rule-editor { font-family: system-ui, sans-serif; }
.class-tab.active { font-weight: bold; border-bottom: 2px solid #1a73e8; }
.clause-block { border: 1px solid #dadce0; border-radius: 6px; margin: 6px 0; padding: 6px; }
.or-operator { display: inline-block; padding: 2px 10px; border-radius: 10px;
  background: #1a73e8; color: #fff; font-size: 12px; }
.clause-block.locked .or-operator { background: #9aa0a6; }
.clause-block.locked { border-color: #9aa0a6; }
.clause-block.banned { background-image:
  repeating-linear-gradient(0deg, #e8eaed 0, #e8eaed 1px, transparent 1px, transparent 8px),
  repeating-linear-gradient(90deg, #e8eaed 0, #e8eaed 1px, transparent 1px, transparent 8px); }
.clause-block.impure .or-operator::after { content: " ~"; }
.literal-block { display: inline-block; margin: 2px; padding: 2px 6px;
  border: 1px solid #dadce0; border-radius: 4px; background: #f8f9fa; }
.literal-block.negated { border-style: dashed; }
.editor-error { color: #c5221f; }
.banned-form { text-decoration: line-through; }
`;

export interface RuleEditorOptions {
  ruleset: RulesetJson;
  /** Object types from GET /importance, most important first. */
  importanceRanked: string[];
  /** Known attribute tags, for the has_attribute template datalist. */
  attributes?: string[];
  /** Wired to the service; resolves with the acknowledged edit response. */
  onEdit: (edit: RuleEditJson) => Promise<EditResponseJson>;
}

export class RuleEditorView {
  readonly element: HTMLElement;
  private model: RuleBlockModel;
  private activeClass: string;
  private readonly importanceRanked: string[];
  private readonly attributes: string[];
  private readonly onEdit: (edit: RuleEditJson) => Promise<EditResponseJson>;
  private search = "";
  private dragSource: { className: string; clauseIndex: number; literalIndex: number } | null =
    null;

  constructor(container: HTMLElement, options: RuleEditorOptions) {
    this.model = parseRuleset(options.ruleset);
    this.activeClass = this.model.rules[0]?.className ?? "";
    this.importanceRanked = options.importanceRanked;
    this.attributes = options.attributes ?? [];
    this.onEdit = options.onEdit;
    this.element = document.createElement("section");
    this.element.className = "rule-editor";
    container.appendChild(this.element);
    this.render();
  }

  /** Reads the ruleset back out of the rendered block tree. */
  serialize(): RulesetJson {
    const root = this.element;
    const rules = [...root.querySelectorAll<HTMLElement>(".rule-panel")].map((panel) => ({
      className: panel.dataset.class ?? "",
      clauses: [...panel.querySelectorAll<HTMLElement>(".clause-block")].map((block) => ({
        literals: [...block.querySelectorAll<HTMLElement>(".literal-block")].map(
          (el): LiteralBlock => ({
            kind: el.dataset.kind as LiteralBlock["kind"],
            args: JSON.parse(el.dataset.args ?? "[]") as (string | number)[],
            negated: el.dataset.negated === "true",
          }),
        ),
        status: (block.dataset.status ?? "normal") as "normal" | "locked" | "banned",
        impure: block.dataset.impure === "true",
      })),
    }));
    const banned: Record<string, string[]> = {};
    for (const el of root.querySelectorAll<HTMLElement>(".banned-form")) {
      const cls = el.dataset.class ?? "";
      (banned[cls] ??= []).push(el.dataset.form ?? "");
    }
    return serializeRuleset({
      generation: Number(root.dataset.generation ?? 0),
      rules,
      banned,
    });
  }

  selectClass(className: string): void {
    this.activeClass = className;
    this.render();
  }

  /** Drag-and-drop: move a literal between clauses as a remove+add pair. */
  async moveLiteral(
    className: string,
    fromClause: number,
    literalIndex: number,
    toClause: number,
  ): Promise<void> {
    const rule = this.model.rules.find((r) => r.className === className);
    const literal = rule?.clauses[fromClause]?.literals[literalIndex];
    if (!literal) return;
    if ((rule?.clauses[fromClause]?.literals.length ?? 0) <= 1) {
      this.showError("a clause must keep at least one predicate");
      return;
    }
    const moved = await this.emit({
      op: "remove_literal",
      class: className,
      clause_index: fromClause,
      literal_index: literalIndex,
    });
    if (!moved) return;
    await this.emit({
      op: "add_literal",
      class: className,
      clause_index: toClause,
      literal: { kind: literal.kind, args: [...literal.args], negated: literal.negated },
    });
  }

  /**
   * Optimistically applies an edit, sends it, reconciles with the response.
   * Returns false when the edit never left the client (guard tripped) or
   * the service rejected it (tree reverted).
   */
  private async emit(edit: RuleEditJson): Promise<boolean> {
    let next: RuleBlockModel;
    try {
      next = applyEditLocally(this.model, edit);
    } catch (err) {
      if (err instanceof LocalEditError) {
        this.showError(err.message);
        return false;
      }
      throw err;
    }
    const previous = this.model;
    this.model = next;
    this.render();
    try {
      const resp = await this.onEdit(edit);
      this.model = parseRuleset(resp.ruleset);
      this.render();
      return true;
    } catch (err) {
      this.model = previous;
      this.render();
      this.showError(err instanceof Error ? err.message : String(err));
      return false;
    }
  }

  private showError(message: string): void {
    const banner = this.element.querySelector<HTMLElement>(".editor-error");
    if (banner) {
      banner.textContent = message;
      banner.hidden = false;
    }
  }

  private paletteLiteral(): LiteralJson | null {
    const kind = this.element.querySelector<HTMLSelectElement>(".palette-kind")?.value;
    const negated =
      this.element.querySelector<HTMLInputElement>(".palette-negated")?.checked ?? false;
    const value = this.element.querySelector<HTMLSelectElement>(".palette-value")?.value ?? "";
    if (kind === "count_at_least") {
      const k = Number(this.element.querySelector<HTMLInputElement>(".palette-count")?.value ?? 1);
      if (!value || !Number.isInteger(k) || k < 1) {
        this.showError("pick an object type and a count of at least 1");
        return null;
      }
      return { kind, args: [value, k], negated };
    }
    if (kind === "overlaps") {
      const other =
        this.element.querySelector<HTMLSelectElement>(".palette-value-b")?.value ?? "";
      if (!value || !other) {
        this.showError("pick two object types");
        return null;
      }
      const pair = [value, other].sort() as [string, string];
      return { kind, args: pair, negated };
    }
    const attr = this.element.querySelector<HTMLInputElement>(".palette-attr")?.value.trim() ?? "";
    if (!attr) {
      this.showError("name an attribute");
      return null;
    }
    return { kind: "has_attribute", args: [attr], negated };
  }

  private render(): void {
    const el = this.element;
    el.textContent = "";
    el.dataset.generation = String(this.model.generation);

    const style = document.createElement("style");
    style.textContent = EDITOR_STYLES;
    el.appendChild(style);

    el.appendChild(this.renderTabs());
    for (const rule of this.model.rules) {
      el.appendChild(this.renderPanel(rule.className));
    }
    el.appendChild(this.renderPalette());

    const error = document.createElement("p");
    error.className = "editor-error";
    error.hidden = true;
    el.appendChild(error);

    el.appendChild(this.renderBannedRegistry());
  }

  private renderTabs(): HTMLElement {
    const nav = document.createElement("nav");
    nav.className = "class-tabs";
    for (const rule of this.model.rules) {
      const tab = document.createElement("button");
      tab.type = "button";
      tab.className = "class-tab" + (rule.className === this.activeClass ? " active" : "");
      tab.dataset.class = rule.className;
      tab.textContent = rule.className;
      tab.addEventListener("click", () => this.selectClass(rule.className));
      nav.appendChild(tab);
    }
    return nav;
  }

  private renderPanel(className: string): HTMLElement {
    const rule = this.model.rules.find((r) => r.className === className)!;
    const panel = document.createElement("section");
    panel.className = "rule-panel";
    panel.dataset.class = className;
    panel.hidden = className !== this.activeClass;

    const list = document.createElement("ol");
    list.className = "clause-list";
    rule.clauses.forEach((clause, clauseIndex) => {
      const block = document.createElement("li");
      block.className =
        clause.status === "normal" ? "clause-block" : `clause-block ${clause.status}`;
      if (clause.impure) block.classList.add("impure");
      block.dataset.status = clause.status;
      block.dataset.impure = String(clause.impure);
      block.dataset.index = String(clauseIndex);

      const or = document.createElement("span");
      or.className = "or-operator";
      or.textContent = "OR";
      block.appendChild(or);

      const literals = document.createElement("ol");
      literals.className = "literal-list";
      clause.literals.forEach((lit, literalIndex) => {
        literals.appendChild(this.renderLiteral(className, clauseIndex, literalIndex, lit));
      });
      block.addEventListener("dragover", (ev) => ev.preventDefault());
      block.addEventListener("drop", (ev) => {
        ev.preventDefault();
        const src = this.dragSource;
        this.dragSource = null;
        if (!src || src.className !== className || src.clauseIndex === clauseIndex) return;
        void this.moveLiteral(className, src.clauseIndex, src.literalIndex, clauseIndex);
      });
      block.appendChild(literals);
      block.appendChild(this.renderClauseActions(className, clauseIndex, clause.status));
      list.appendChild(block);
    });
    panel.appendChild(list);
    return panel;
  }

  private renderLiteral(
    className: string,
    clauseIndex: number,
    literalIndex: number,
    lit: LiteralBlock,
  ): HTMLElement {
    const el = document.createElement("li");
    el.className = "literal-block" + (lit.negated ? " negated" : "");
    el.dataset.kind = lit.kind;
    el.dataset.args = JSON.stringify(lit.args);
    el.dataset.negated = String(lit.negated);
    el.draggable = true;
    el.addEventListener("dragstart", () => {
      this.dragSource = { className, clauseIndex, literalIndex };
    });

    const text = document.createElement("span");
    text.className = "literal-text";
    text.textContent = literalCanonical(lit);
    el.appendChild(text);

    const negate = document.createElement("button");
    negate.type = "button";
    negate.className = "negate-literal";
    negate.textContent = "¬";
    negate.title = "toggle negation";
    negate.addEventListener("click", () => {
      void this.emit({
        op: "edit_literal",
        class: className,
        clause_index: clauseIndex,
        literal_index: literalIndex,
        literal: { kind: lit.kind, args: [...lit.args], negated: !lit.negated },
      });
    });
    el.appendChild(negate);

    const remove = document.createElement("button");
    remove.type = "button";
    remove.className = "remove-literal";
    remove.textContent = "×";
    remove.title = "remove predicate";
    remove.addEventListener("click", () => {
      void this.emit({
        op: "remove_literal",
        class: className,
        clause_index: clauseIndex,
        literal_index: literalIndex,
      });
    });
    el.appendChild(remove);
    return el;
  }

  private renderClauseActions(
    className: string,
    clauseIndex: number,
    status: "normal" | "locked" | "banned",
  ): HTMLElement {
    const actions = document.createElement("div");
    actions.className = "clause-actions";

    const lock = document.createElement("button");
    lock.type = "button";
    lock.className = "lock-toggle";
    lock.textContent = status === "locked" ? "Unlock" : "Lock";
    lock.addEventListener("click", () => {
      void this.emit({
        op: status === "locked" ? "unlock" : "lock",
        class: className,
        clause_index: clauseIndex,
      });
    });
    actions.appendChild(lock);

    const ban = document.createElement("button");
    ban.type = "button";
    ban.className = "ban-clause";
    ban.textContent = "Ban";
    ban.addEventListener("click", () => {
      void this.emit({ op: "ban", class: className, clause_index: clauseIndex });
    });
    actions.appendChild(ban);

    const remove = document.createElement("button");
    remove.type = "button";
    remove.className = "remove-clause";
    remove.textContent = "Remove clause";
    remove.addEventListener("click", () => {
      void this.emit({ op: "remove_clause", class: className, clause_index: clauseIndex });
    });
    actions.appendChild(remove);

    const add = document.createElement("button");
    add.type = "button";
    add.className = "add-literal";
    add.textContent = "+ predicate";
    add.addEventListener("click", () => {
      const literal = this.paletteLiteral();
      if (!literal) return;
      void this.emit({
        op: "add_literal",
        class: className,
        clause_index: clauseIndex,
        literal,
      });
    });
    actions.appendChild(add);
    return actions;
  }

  private renderPalette(): HTMLElement {
    const palette = document.createElement("div");
    palette.className = "palette";

    const kind = document.createElement("select");
    kind.className = "palette-kind";
    for (const k of ["count_at_least", "overlaps", "has_attribute"]) {
      const opt = document.createElement("option");
      opt.value = k;
      opt.textContent = k;
      kind.appendChild(opt);
    }
    palette.appendChild(kind);

    const search = document.createElement("input");
    search.className = "palette-search";
    search.placeholder = "search values";
    search.value = this.search;
    search.addEventListener("input", () => {
      this.search = search.value;
      fillValues(this.search);
    });
    palette.appendChild(search);

    const value = document.createElement("select");
    value.className = "palette-value";
    const valueB = document.createElement("select");
    valueB.className = "palette-value-b";
    const fillValues = (query: string) => {
      const lower = query.toLowerCase();
      for (const select of [value, valueB]) {
        select.textContent = "";
        for (const type of this.importanceRanked) {
          if (lower && !type.toLowerCase().includes(lower)) continue;
          const opt = document.createElement("option");
          opt.value = type;
          opt.textContent = type;
          select.appendChild(opt);
        }
      }
    };
    fillValues(this.search);
    palette.appendChild(value);
    palette.appendChild(valueB);

    const count = document.createElement("input");
    count.className = "palette-count";
    count.type = "number";
    count.min = "1";
    count.value = "1";
    palette.appendChild(count);

    const attr = document.createElement("input");
    attr.className = "palette-attr";
    attr.setAttribute("list", "palette-attr-options");
    const datalist = document.createElement("datalist");
    datalist.id = "palette-attr-options";
    for (const name of this.attributes) {
      const opt = document.createElement("option");
      opt.value = name;
      datalist.appendChild(opt);
    }
    palette.appendChild(attr);
    palette.appendChild(datalist);

    const negated = document.createElement("input");
    negated.type = "checkbox";
    negated.className = "palette-negated";
    palette.appendChild(negated);

    const addClause = document.createElement("button");
    addClause.type = "button";
    addClause.className = "add-clause";
    addClause.textContent = "+ OR clause";
    addClause.addEventListener("click", () => {
      const literal = this.paletteLiteral();
      if (!literal) return;
      void this.emit({
        op: "add_clause",
        class: this.activeClass,
        clause: { literals: [literal], status: "normal", impure: false },
      });
    });
    palette.appendChild(addClause);
    return palette;
  }

  private renderBannedRegistry(): HTMLElement {
    const footer = document.createElement("footer");
    footer.className = "banned-registry";
    for (const [cls, forms] of Object.entries(this.model.banned)) {
      for (const form of forms) {
        const item = document.createElement("span");
        item.className = "banned-form";
        item.dataset.class = cls;
        item.dataset.form = form;
        item.textContent = `${cls}: ${form}`;
        const unban = document.createElement("button");
        unban.type = "button";
        unban.className = "unban-form";
        unban.textContent = "Unban";
        unban.addEventListener("click", () => {
          void this.emit({ op: "unban", class: cls, canonical_form: form });
        });
        item.appendChild(unban);
        footer.appendChild(item);
      }
    }
    return footer;
  }
}

export function renderRuleEditor(
  container: HTMLElement,
  options: RuleEditorOptions,
): RuleEditorView {
  return new RuleEditorView(container, options);
}
