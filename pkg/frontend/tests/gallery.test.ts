import { describe, expect, it } from "vitest";

import type { ImagesPageJson } from "../src/api.js";
import { defaultGalleryOrder, galleryItem, renderGallery } from "../src/gallery.js";
import { makeImage } from "./helpers/fixtures.js";

function page(): ImagesPageJson {
  return {
    page: 1,
    page_size: 50,
    total: 4,
    items: [
      {
        image: makeImage("img_a", ["tiled"], ["kettle"]),
        label_state: { image_id: "img_a", status: "manual", label: "kitchen", updated_generation: 1 },
        suggested: false,
      },
      {
        image: makeImage("img_b"),
        label_state: { image_id: "img_b", status: "unlabeled", updated_generation: 1 },
        suggested: true,
      },
      {
        image: makeImage("img_c"),
        label_state: {
          image_id: "img_c",
          status: "ambiguous",
          classes: ["kitchen", "office"],
          updated_generation: 1,
        },
        suggested: false,
      },
      {
        image: makeImage("img_d"),
        label_state: { image_id: "img_d", status: "auto", label: "office", updated_generation: 1 },
        suggested: true,
      },
    ],
  };
}

describe("gallery model", () => {
  it("maps rows into display models", () => {
    const item = galleryItem(page().items[0]!);
    expect(item).toMatchObject({
      id: "img_a",
      thumbnail: "mem://img_a",
      badge: "manual",
      label: "kitchen",
      suggested: false,
    });
    expect(item.evidence).toEqual([{ type: "kettle", bbox: [0, 0, 10, 10] }]);
  });

  it("suggested items sort before the rest, both sides keeping server order", () => {
    const ordered = defaultGalleryOrder(page().items.map(galleryItem));
    expect(ordered.map((i) => i.id)).toEqual(["img_b", "img_d", "img_a", "img_c"]);
  });
});

describe("gallery rendering", () => {
  it("marks suggested cards with the highlight marker", () => {
    const grid = renderGallery(document.createElement("div"), page());
    const cards = [...grid.querySelectorAll<HTMLElement>(".gallery-card")];
    expect(cards.map((c) => c.dataset.imageId)).toEqual(["img_b", "img_d", "img_a", "img_c"]);
    expect(cards[0]!.classList.contains("suggested")).toBe(true);
    expect(cards[0]!.querySelector(".suggestion-marker")).not.toBeNull();
    expect(cards[2]!.querySelector(".suggestion-marker")).toBeNull();
  });

  it("shows label badges including the ambiguous class list", () => {
    const grid = renderGallery(document.createElement("div"), page());
    const badgeFor = (id: string) =>
      grid.querySelector<HTMLElement>(`[data-image-id="${id}"] .label-badge`)!.textContent;
    expect(badgeFor("img_a")).toBe("kitchen (manual)");
    expect(badgeFor("img_d")).toBe("office (auto)");
    expect(badgeFor("img_c")).toBe("ambiguous: kitchen, office");
    expect(badgeFor("img_b")).toBe("unlabeled");
  });

  it("evidence overlay toggles and positions the detected boxes", () => {
    const grid = renderGallery(document.createElement("div"), page());
    const card = grid.querySelector<HTMLElement>('[data-image-id="img_a"]')!;
    const overlay = card.querySelector<HTMLElement>(".evidence-overlay")!;
    expect(overlay.hidden).toBe(true);

    card.querySelector<HTMLButtonElement>(".overlay-toggle")!.click();
    expect(overlay.hidden).toBe(false);
    const box = overlay.querySelector<HTMLElement>(".evidence-box")!;
    expect(box.dataset.type).toBe("kettle");
    expect(box.style.left).toBe("0px");
    expect(box.style.width).toBe("10px");
  });
});
