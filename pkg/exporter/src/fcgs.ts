/**
 * The FCGS labeled-feature-set binary format (little-endian):
 *
 *   magic   4 bytes  "FCGS"
 *   version u32      1
 *   N       u64      number of rows
 *   d       u32      feature dimension
 *   C       u32      number of classes
 *
 * then N*d float32 features row-major, then N labels as u32. The 24-byte
 * header plus exact payload size makes truncation detectable. This layout is
 * a bit-exact contract with the simulator that consumes these files.
 */

import * as fs from 'fs'

export const FCGS_MAGIC = 'FCGS'
export const FCGS_VERSION = 1
export const HEADER_BYTES = 24

export interface FeatureSet {
  /** row-major N*d float32 */
  features: Float32Array
  labels: Uint32Array
  numClasses: number
  dim: number
}

export function rowCount(set: FeatureSet): number {
  return set.labels.length
}

function validate(set: FeatureSet): void {
  const n = set.labels.length
  if (n < 1) throw new Error('feature set must hold at least one row')
  if (set.dim < 1 || set.numClasses < 1) throw new Error('dim and numClasses must be >= 1')
  if (set.features.length !== n * set.dim) {
    throw new Error(`features length ${set.features.length} != N*d = ${n * set.dim}`)
  }
  for (const value of set.features) {
    if (!Number.isFinite(value)) throw new Error('features contain non-finite entries')
  }
  for (const label of set.labels) {
    if (label >= set.numClasses) {
      throw new Error(`label ${label} out of range for ${set.numClasses} classes`)
    }
  }
}

export function encodeFcgs(set: FeatureSet): Buffer {
  validate(set)
  const n = set.labels.length
  const buf = Buffer.alloc(HEADER_BYTES + n * set.dim * 4 + n * 4)
  buf.write(FCGS_MAGIC, 0, 'ascii')
  buf.writeUInt32LE(FCGS_VERSION, 4)
  buf.writeBigUInt64LE(BigInt(n), 8)
  buf.writeUInt32LE(set.dim, 16)
  buf.writeUInt32LE(set.numClasses, 20)
  let offset = HEADER_BYTES
  for (const value of set.features) {
    buf.writeFloatLE(value, offset)
    offset += 4
  }
  for (const label of set.labels) {
    buf.writeUInt32LE(label, offset)
    offset += 4
  }
  return buf
}

export function writeFcgs(set: FeatureSet, path: string): void {
  fs.writeFileSync(path, encodeFcgs(set))
}

export function decodeFcgs(buf: Buffer): FeatureSet {
  if (buf.length < HEADER_BYTES) throw new Error(`file too short for header (${buf.length} bytes)`)
  if (buf.toString('ascii', 0, 4) !== FCGS_MAGIC) {
    throw new Error(`bad magic ${JSON.stringify(buf.toString('ascii', 0, 4))}`)
  }
  const version = buf.readUInt32LE(4)
  if (version !== FCGS_VERSION) throw new Error(`unsupported version ${version}`)
  const n = Number(buf.readBigUInt64LE(8))
  const dim = buf.readUInt32LE(16)
  const numClasses = buf.readUInt32LE(20)
  if (n < 1 || dim < 1 || numClasses < 1) {
    throw new Error(`degenerate header: N=${n}, d=${dim}, C=${numClasses}`)
  }
  const expected = HEADER_BYTES + n * dim * 4 + n * 4
  if (buf.length < expected) {
    throw new Error(`truncated: expected ${expected} bytes, file has ${buf.length}`)
  }
  if (buf.length > expected) {
    throw new Error(`trailing bytes: expected ${expected} bytes, file has ${buf.length}`)
  }
  const features = new Float32Array(n * dim)
  let offset = HEADER_BYTES
  for (let i = 0; i < features.length; i++) {
    features[i] = buf.readFloatLE(offset)
    offset += 4
  }
  const labels = new Uint32Array(n)
  for (let i = 0; i < n; i++) {
    labels[i] = buf.readUInt32LE(offset)
    offset += 4
  }
  const set = { features, labels, numClasses, dim }
  validate(set)
  return set
}

export function readFcgs(path: string): FeatureSet {
  return decodeFcgs(fs.readFileSync(path))
}
