/** Display <-> image coordinate mapping for a scaled image element. */

export interface DisplayRect {
  left: number;
  top: number;
  width: number;
  height: number;
}

export interface ImagePoint {
  x: number;
  y: number;
}

/**
 * Map a client-space point onto integer image pixels, accounting for the
 * element's display scaling. Results are clamped to the image bounds so
 * clicks on the last half-pixel row/column still resolve.
 */
export function displayToImage(
  clientX: number,
  clientY: number,
  rect: DisplayRect,
  imageWidth: number,
  imageHeight: number
): ImagePoint {
  const sx = imageWidth / rect.width;
  const sy = imageHeight / rect.height;
  const x = Math.floor((clientX - rect.left) * sx);
  const y = Math.floor((clientY - rect.top) * sy);
  return {
    x: Math.min(Math.max(x, 0), imageWidth - 1),
    y: Math.min(Math.max(y, 0), imageHeight - 1),
  };
}

/** Center of an image pixel in client space (inverse of displayToImage). */
export function imageToDisplay(
  point: ImagePoint,
  rect: DisplayRect,
  imageWidth: number,
  imageHeight: number
): { clientX: number; clientY: number } {
  const sx = rect.width / imageWidth;
  const sy = rect.height / imageHeight;
  return {
    clientX: rect.left + (point.x + 0.5) * sx,
    clientY: rect.top + (point.y + 0.5) * sy,
  };
}
