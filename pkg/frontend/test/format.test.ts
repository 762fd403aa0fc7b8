import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

import {
  FormatError,
  decoderWidth,
  packParameters,
  parameterCount,
  parseHeader,
  planeCount,
} from "../src/format.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixture = JSON.parse(
  readFileSync(join(here, "fixtures", "viewer_fixture.json"), "utf-8"),
);

function freshHeader(): Record<string, unknown> {
  return JSON.parse(JSON.stringify(fixture.header));
}

describe("parseHeader", () => {
  it("accepts the toolkit-written header", () => {
    const header = parseHeader(freshHeader());
    expect(header.K).toBe(9);
    expect(decoderWidth(header)).toBe(20);
    expect(parameterCount(header)).toBe(723);
  });

  it("names a missing key", () => {
    const broken = freshHeader();
    delete broken.quant;
    expect(() => parseHeader(broken)).toThrowError(/quant/);
  });

  it("rejects unknown method tags", () => {
    const broken = freshHeader();
    broken.method = "mystery";
    expect(() => parseHeader(broken)).toThrowError(/method/);
  });

  it("gates on K=9", () => {
    const broken = freshHeader();
    broken.K = 12;
    expect(() => parseHeader(broken)).toThrowError(/K=12/);
  });

  it("gates on format_version", () => {
    const broken = freshHeader();
    broken.format_version = 2;
    expect(() => parseHeader(broken)).toThrowError(FormatError);
  });

  it("checks weight counts against layer sizes", () => {
    const broken = freshHeader() as { decoder: { weights: number[][] } };
    broken.decoder.weights[0] = broken.decoder.weights[0].slice(0, -1);
    expect(() => parseHeader(broken)).toThrowError(/219 weights, expected 220/);
  });

  it("checks bias counts", () => {
    const broken = freshHeader() as { decoder: { biases: number[][] } };
    broken.decoder.biases[2] = [0, 0];
    expect(() => parseHeader(broken)).toThrowError(/2 biases, expected 3/);
  });

  it("rejects non-elu activations", () => {
    const broken = freshHeader() as { decoder: { activation: string } };
    broken.decoder.activation = "relu";
    expect(() => parseHeader(broken)).toThrowError(/elu/);
  });
});

describe("layout helpers", () => {
  it("three planes for K=9", () => {
    expect(planeCount(9)).toBe(3);
  });

  it("packs parameters in layer order with biases trailing each layer", () => {
    const header = parseHeader(freshHeader());
    const packed = packParameters(header);
    expect(packed.length).toBe(723);
    expect(packed[0]).toBeCloseTo(header.decoder.weights[0][0], 6);
    const b0Start = header.decoder.weights[0].length;
    expect(packed[b0Start]).toBeCloseTo(header.decoder.biases[0][0], 6);
  });
});
