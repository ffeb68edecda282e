/**
 * Gallery models and rendering: thumbnails with label-state badges,
 * active-learning suggestion highlighting, and an evidence overlay toggle
 * that draws the service's detected-object boxes over the image.
 */

import type { GalleryRowJson, ImagesPageJson, LabelStatus } from "./api.js";

export interface GalleryItemModel {
  id: string;
  thumbnail: string;
  badge: LabelStatus;
  label: string | null;
  /** For ambiguous images: every class whose rule matched. */
  classes: string[];
  suggested: boolean;
  evidence: { type: string; bbox: [number, number, number, number] }[];
}

export function galleryItem(row: GalleryRowJson): GalleryItemModel {
  return {
    id: row.image.id,
    thumbnail: row.image.uri,
    badge: row.label_state.status,
    label: row.label_state.label ?? null,
    classes: row.label_state.classes ?? [],
    suggested: row.suggested,
    evidence: row.image.objects.map((o) => ({ type: o.type, bbox: o.bbox })),
  };
}

/**
 * Default gallery order: suggested images first (in the order the page
 * delivered them — the service already ranks them), everything else after,
 * original order preserved on both sides.
 */
export function defaultGalleryOrder(items: GalleryItemModel[]): GalleryItemModel[] {
  return [...items.filter((i) => i.suggested), ...items.filter((i) => !i.suggested)];
}

export function renderGallery(container: HTMLElement, page: ImagesPageJson): HTMLElement {
  const grid = document.createElement("div");
  grid.className = "gallery";
  grid.dataset.total = String(page.total);
  grid.dataset.page = String(page.page);

  for (const item of defaultGalleryOrder(page.items.map(galleryItem))) {
    const card = document.createElement("figure");
    card.className = "gallery-card" + (item.suggested ? " suggested" : "");
    card.dataset.imageId = item.id;

    if (item.suggested) {
      const marker = document.createElement("span");
      marker.className = "suggestion-marker";
      marker.textContent = "★ suggested";
      card.appendChild(marker);
    }

    const img = document.createElement("img");
    img.src = item.thumbnail;
    img.alt = item.id;
    card.appendChild(img);

    const badge = document.createElement("span");
    badge.className = `label-badge ${item.badge}`;
    badge.textContent = item.label
      ? `${item.label} (${item.badge})`
      : item.badge === "ambiguous"
        ? `ambiguous: ${item.classes.join(", ")}`
        : item.badge;
    card.appendChild(badge);

    const toggle = document.createElement("button");
    toggle.type = "button";
    toggle.className = "overlay-toggle";
    toggle.textContent = "evidence";
    const overlay = document.createElement("div");
    overlay.className = "evidence-overlay";
    overlay.hidden = true;
    for (const box of item.evidence) {
      const el = document.createElement("span");
      el.className = "evidence-box";
      el.dataset.type = box.type;
      const [x, y, w, h] = box.bbox;
      el.style.left = `${x}px`;
      el.style.top = `${y}px`;
      el.style.width = `${w}px`;
      el.style.height = `${h}px`;
      overlay.appendChild(el);
    }
    toggle.addEventListener("click", () => {
      overlay.hidden = !overlay.hidden;
    });
    card.appendChild(toggle);
    card.appendChild(overlay);
    grid.appendChild(card);
  }

  container.appendChild(grid);
  return grid;
}
