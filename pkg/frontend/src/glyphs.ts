/**
 * Dot-glyph helpers for the visual choice grid.
 *
 * Cells 1,2,3 run down the left column and 4,5,6 down the right; digits
 * only use the top two rows, so their glyphs render as 2x2 dot squares.
 */

export const GRID_ROWS = 3;
export const GRID_COLS = 2;

/** Fixed canonical presentation order for the digit choices (never shuffled). */
export const CANONICAL_DIGITS = ["1", "2", "3", "4", "5", "6", "7", "8", "9", "0"] as const;

export function parseCells(cells: string): number[] {
  if (cells === "") return [];
  if (!/^[1-6]+$/.test(cells)) {
    throw new Error(`not a cell string: "${cells}"`);
  }
  return Array.from(new Set(cells.split("").map(Number))).sort((a, b) => a - b);
}

/** row-major boolean grid: grid[row][col], row 0 on top, col 0 left. */
export function dotGrid(cells: string, rows: number = GRID_ROWS): boolean[][] {
  const raised = new Set(parseCells(cells));
  const grid: boolean[][] = [];
  for (let row = 0; row < rows; row++) {
    const line: boolean[] = [];
    for (let col = 0; col < GRID_COLS; col++) {
      line.push(raised.has(col * 3 + row + 1));
    }
    grid.push(line);
  }
  return grid;
}

/** Rows needed to show every raised dot (minimum 2: the digit grid). */
export function rowsNeeded(cells: string): number {
  const raised = parseCells(cells);
  const deepest = raised.reduce((acc, cell) => Math.max(acc, ((cell - 1) % 3) + 1), 0);
  return Math.max(2, deepest);
}

/** Unicode Braille Patterns character for a cell string (dot n = bit n-1). */
export function glyphChar(cells: string): string {
  const mask = parseCells(cells).reduce((acc, cell) => acc | (1 << (cell - 1)), 0);
  return String.fromCodePoint(0x2800 + mask);
}
