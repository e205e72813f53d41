/**
 * Readers for the standard on-disk forms of CIFAR-10, CIFAR-100, and SVHN
 * (cropped digits). Everything is decoded to one layout: uint8 RGB pixels,
 * HWC row-major per image, plus integer labels.
 *
 * CIFAR batches are the plain binary records from the original archives
 * (label byte(s) + 3072 channel-planar pixel bytes). SVHN ships as MATLAB
 * v5/v7 .mat files; a minimal MAT parser below handles the numeric arrays
 * those files contain, including zlib-compressed elements.
 */

import * as fs from 'fs'
import * as path from 'path'
import * as zlib from 'zlib'

export interface ImageDataset {
  /** HWC row-major uint8, concatenated over images */
  images: Uint8Array
  height: number
  width: number
  labels: Uint32Array
  numClasses: number
  count: number
}

export type DatasetName = 'cifar10' | 'cifar100' | 'svhn'
export type Split = 'train' | 'test'

/** Row counts of the published splits, used as an export-time sanity check. */
export const PUBLISHED_SIZES: Record<DatasetName, Record<Split, number>> = {
  cifar10: { train: 50_000, test: 10_000 },
  cifar100: { train: 50_000, test: 10_000 },
  svhn: { train: 73_257, test: 26_032 },
}

const CIFAR_PIXELS = 32 * 32
const CIFAR_RECORD_PIXELS = 3 * CIFAR_PIXELS

function planarToHwc(record: Uint8Array, out: Uint8Array, outOffset: number): void {
  // CIFAR stores 1024 red bytes, then green, then blue, each row-major.
  for (let p = 0; p < CIFAR_PIXELS; p++) {
    out[outOffset + 3 * p] = record[p]
    out[outOffset + 3 * p + 1] = record[CIFAR_PIXELS + p]
    out[outOffset + 3 * p + 2] = record[2 * CIFAR_PIXELS + p]
  }
}

function readCifarRecords(
  files: string[],
  labelBytes: number,
  labelIndex: number,
  numClasses: number,
): ImageDataset {
  const recordBytes = labelBytes + CIFAR_RECORD_PIXELS
  let total = 0
  const buffers: Buffer[] = []
  for (const file of files) {
    const buf = fs.readFileSync(file)
    if (buf.length % recordBytes !== 0) {
      throw new Error(`${file}: size ${buf.length} is not a multiple of ${recordBytes}`)
    }
    total += buf.length / recordBytes
    buffers.push(buf)
  }
  const images = new Uint8Array(total * CIFAR_RECORD_PIXELS)
  const labels = new Uint32Array(total)
  let row = 0
  for (const buf of buffers) {
    for (let off = 0; off < buf.length; off += recordBytes) {
      const label = buf[off + labelIndex]
      if (label >= numClasses) throw new Error(`label ${label} out of range`)
      labels[row] = label
      planarToHwc(
        buf.subarray(off + labelBytes, off + recordBytes),
        images,
        row * CIFAR_RECORD_PIXELS,
      )
      row++
    }
  }
  return { images, height: 32, width: 32, labels, numClasses, count: total }
}

export function loadCifar10(dataDir: string, split: Split): ImageDataset {
  const files =
    split === 'train'
      ? [1, 2, 3, 4, 5].map((i) => path.join(dataDir, `data_batch_${i}.bin`))
      : [path.join(dataDir, 'test_batch.bin')]
  return readCifarRecords(files, 1, 0, 10)
}

export function loadCifar100(dataDir: string, split: Split): ImageDataset {
  // records carry a coarse label byte then the fine label byte; we use fine
  const file = path.join(dataDir, split === 'train' ? 'train.bin' : 'test.bin')
  return readCifarRecords([file], 2, 1, 100)
}

// ---------------------------------------------------------------------------
// Minimal MATLAB v5 .mat reader (numeric arrays only)
// ---------------------------------------------------------------------------

const MI_COMPRESSED = 15
const MI_MATRIX = 14

const ELEMENT_BYTES: Record<number, number> = {
  1: 1, // miINT8
  2: 1, // miUINT8
  3: 2, // miINT16
  4: 2, // miUINT16
  5: 4, // miINT32
  6: 4, // miUINT32
  7: 4, // miSINGLE
  9: 8, // miDOUBLE
  12: 8, // miINT64
  13: 8, // miUINT64
}

interface MatElement {
  type: number
  data: Buffer
  /** bytes consumed from the parent buffer, including tag and padding */
  size: number
}

function readElement(buf: Buffer, offset: number): MatElement {
  const word0 = buf.readUInt32LE(offset)
  const smallBytes = word0 >>> 16
  if (smallBytes !== 0) {
    // small element: type and byte count packed into the first word
    return {
      type: word0 & 0xffff,
      data: buf.subarray(offset + 4, offset + 4 + smallBytes),
      size: 8,
    }
  }
  const type = word0
  const numBytes = buf.readUInt32LE(offset + 4)
  const data = buf.subarray(offset + 8, offset + 8 + numBytes)
  const padded = Math.ceil(numBytes / 8) * 8
  return { type, data, size: 8 + padded }
}

function decodeNumeric(type: number, data: Buffer): ArrayLike<number> {
  const copy = Buffer.from(data) // align for typed-array views
  switch (type) {
    case 1:
      return new Int8Array(copy.buffer, copy.byteOffset, copy.length)
    case 2:
      return new Uint8Array(copy.buffer, copy.byteOffset, copy.length)
    case 3:
      return new Int16Array(copy.buffer, copy.byteOffset, copy.length / 2)
    case 4:
      return new Uint16Array(copy.buffer, copy.byteOffset, copy.length / 2)
    case 5:
      return new Int32Array(copy.buffer, copy.byteOffset, copy.length / 4)
    case 6:
      return new Uint32Array(copy.buffer, copy.byteOffset, copy.length / 4)
    case 7:
      return new Float32Array(copy.buffer, copy.byteOffset, copy.length / 4)
    case 9:
      return new Float64Array(copy.buffer, copy.byteOffset, copy.length / 8)
    default:
      throw new Error(`unsupported MAT numeric element type ${type}`)
  }
}

export interface MatArray {
  /** MATLAB dimensions (arrays are stored column-major) */
  dims: number[]
  values: ArrayLike<number>
}

function parseMatrix(data: Buffer): { name: string; array: MatArray } {
  let offset = 0
  const flags = readElement(data, offset)
  offset += flags.size
  const arrayClass = flags.data[0]
  // numeric classes: double(6) single(7) int8(8) uint8(9) ... uint32(13)
  if (arrayClass < 6 || arrayClass > 13) {
    throw new Error(`unsupported MAT array class ${arrayClass} (numeric arrays only)`)
  }
  const dimsElement = readElement(data, offset)
  offset += dimsElement.size
  const dims: number[] = []
  for (let i = 0; i < dimsElement.data.length; i += 4) {
    dims.push(dimsElement.data.readInt32LE(i))
  }
  const nameElement = readElement(data, offset)
  offset += nameElement.size
  const name = nameElement.data.toString('ascii')
  const real = readElement(data, offset)
  if (!(real.type in ELEMENT_BYTES)) {
    throw new Error(`unsupported MAT data element type ${real.type}`)
  }
  const values = decodeNumeric(real.type, real.data)
  const expected = dims.reduce((a, b) => a * b, 1)
  if (values.length !== expected) {
    throw new Error(`MAT array ${name}: ${values.length} values for dims ${dims.join('x')}`)
  }
  return { name, array: { dims, values } }
}

export function parseMat(buf: Buffer): Map<string, MatArray> {
  if (buf.length < 128) throw new Error('not a MAT-file: header too short')
  const endian = buf.toString('ascii', 126, 128)
  if (endian !== 'IM') {
    throw new Error(`unsupported MAT endianness marker ${JSON.stringify(endian)}`)
  }
  const out = new Map<string, MatArray>()
  let offset = 128
  while (offset + 8 <= buf.length) {
    const element = readElement(buf, offset)
    offset += element.size
    let payload = element
    if (element.type === MI_COMPRESSED) {
      payload = readElement(zlib.inflateSync(element.data), 0)
    }
    if (payload.type !== MI_MATRIX) {
      continue // skip non-matrix top-level elements
    }
    const { name, array } = parseMatrix(payload.data)
    out.set(name, array)
  }
  return out
}

export function loadSvhn(dataDir: string, split: Split): ImageDataset {
  const file = path.join(dataDir, split === 'train' ? 'train_32x32.mat' : 'test_32x32.mat')
  return loadSvhnMat(file)
}

export function loadSvhnMat(file: string): ImageDataset {
  const variables = parseMat(fs.readFileSync(file))
  const x = variables.get('X')
  const y = variables.get('y')
  if (!x || !y) throw new Error(`${file}: expected variables X and y`)
  if (x.dims.length !== 4 || x.dims[2] !== 3) {
    throw new Error(`${file}: X has dims ${x.dims.join('x')}, expected H x W x 3 x N`)
  }
  const [height, width, , count] = x.dims
  const images = new Uint8Array(count * height * width * 3)
  const plane = height * width
  // column-major on disk: index = h + H*w + H*W*c + H*W*3*n
  for (let n = 0; n < count; n++) {
    const base = n * 3 * plane
    for (let h = 0; h < height; h++) {
      for (let w = 0; w < width; w++) {
        for (let c = 0; c < 3; c++) {
          images[((n * height + h) * width + w) * 3 + c] =
            x.values[h + height * w + plane * c + base] as number
        }
      }
    }
  }
  const labels = new Uint32Array(count)
  for (let n = 0; n < count; n++) {
    labels[n] = (y.values[n] as number) % 10 // SVHN stores digit 0 as 10
  }
  return { images, height, width, labels, numClasses: 10, count }
}

export function loadDataset(name: DatasetName, split: Split, dataDir: string): ImageDataset {
  switch (name) {
    case 'cifar10':
      return loadCifar10(dataDir, split)
    case 'cifar100':
      return loadCifar100(dataDir, split)
    case 'svhn':
      return loadSvhn(dataDir, split)
  }
}
