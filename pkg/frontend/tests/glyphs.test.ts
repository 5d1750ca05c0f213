import { describe, expect, it } from "vitest";

import { CANONICAL_DIGITS, dotGrid, glyphChar, parseCells, rowsNeeded } from "../src/glyphs.js";

describe("parseCells", () => {
  it("parses sorted unique cells", () => {
    expect(parseCells("1245")).toEqual([1, 2, 4, 5]);
    expect(parseCells("")).toEqual([]);
  });

  it("rejects junk", () => {
    expect(() => parseCells("17x")).toThrow();
    expect(() => parseCells("7")).toThrow();
  });
});

describe("dotGrid", () => {
  it("maps left column to cells 1-3 and right to 4-6", () => {
    // digit 7 = cells 1,2,4,5: full 2x2 square on top rows
    expect(dotGrid("1245", 2)).toEqual([
      [true, true],
      [true, true],
    ]);
    // digit 1 = cell 1: top-left only
    expect(dotGrid("1", 2)).toEqual([
      [true, false],
      [false, false],
    ]);
    // letter u = cells 1,3,6 needs its third row
    expect(dotGrid("136", 3)).toEqual([
      [true, false],
      [false, false],
      [true, true],
    ]);
  });
});

describe("rowsNeeded", () => {
  it("keeps the two-row digit grid as a floor", () => {
    expect(rowsNeeded("1")).toBe(2);
    expect(rowsNeeded("1245")).toBe(2);
    expect(rowsNeeded("136")).toBe(3);
  });
});

describe("glyphChar", () => {
  it("matches the Unicode Braille chart", () => {
    expect(glyphChar("1")).toBe("⠁"); // a
    expect(glyphChar("1245")).toBe("⠛"); // g
    expect(glyphChar("2456")).toBe("⠺"); // w
  });
});

describe("canonical choice order", () => {
  it("is 1..9 then 0 and never changes", () => {
    expect(CANONICAL_DIGITS.join("")).toBe("1234567890");
  });
});
