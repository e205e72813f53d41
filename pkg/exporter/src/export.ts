/**
 * Batch a dataset through a feature extractor and write an FCGS feature
 * file plus a JSON sidecar recording exactly how the features were made.
 */

import * as fs from 'fs'

import { BackboneName, FeatureExtractor, describePreprocessing } from './backbone'
import { DatasetName, ImageDataset, PUBLISHED_SIZES, Split, loadDataset } from './datasets'
import { readFcgs, writeFcgs } from './fcgs'

export interface ExportSpec {
  dataset: DatasetName
  split: Split
  backbone: BackboneName
  outPath: string
  dataDir: string
  batchSize: number
  modelUrl?: string
  /** cap on exported rows, for smoke runs; full exports must match the published size */
  limit?: number
}

export interface ExportSummary {
  rows: number
  dim: number
  numClasses: number
  outPath: string
  sidecarPath: string
}

export async function exportFeatures(
  spec: ExportSpec,
  extractor: FeatureExtractor,
  dataset?: ImageDataset,
): Promise<ExportSummary> {
  const data = dataset ?? loadDataset(spec.dataset, spec.split, spec.dataDir)
  const published = PUBLISHED_SIZES[spec.dataset][spec.split]
  if (spec.limit === undefined && data.count !== published) {
    throw new Error(
      `${spec.dataset}/${spec.split} has ${data.count} rows, expected ${published}; ` +
        `pass --limit for partial exports`,
    )
  }
  const rows = spec.limit === undefined ? data.count : Math.min(spec.limit, data.count)
  if (rows < 1) throw new Error('nothing to export')

  const dim = extractor.featureDim
  const pixelsPerImage = data.height * data.width * 3
  const features = new Float32Array(rows * dim)
  const labels = new Uint32Array(rows)
  for (let start = 0; start < rows; start += spec.batchSize) {
    const count = Math.min(spec.batchSize, rows - start)
    const slice = data.images.subarray(
      start * pixelsPerImage,
      (start + count) * pixelsPerImage,
    )
    const batch = await extractor.extract(slice, count, data.height, data.width)
    if (batch.length !== count * dim) {
      throw new Error(`extractor returned ${batch.length} values, expected ${count * dim}`)
    }
    features.set(batch, start * dim)
    for (let i = 0; i < count; i++) labels[start + i] = data.labels[start + i]
  }

  writeFcgs(
    { features, labels, numClasses: data.numClasses, dim },
    spec.outPath,
  )
  // the written file must satisfy the format contract end to end
  const check = readFcgs(spec.outPath)
  if (check.labels.length !== rows || check.dim !== dim || check.numClasses !== data.numClasses) {
    throw new Error('written file failed validation on re-read')
  }

  const sidecarPath = `${spec.outPath}.json`
  fs.writeFileSync(
    sidecarPath,
    JSON.stringify(
      {
        dataset: spec.dataset,
        split: spec.split,
        backbone: spec.backbone,
        modelUrl: spec.modelUrl ?? null,
        preprocessing: describePreprocessing(spec.backbone),
        rows,
        dim,
        numClasses: data.numClasses,
        batchSize: spec.batchSize,
        limited: spec.limit !== undefined,
      },
      null,
      2,
    ) + '\n',
  )
  return { rows, dim, numClasses: data.numClasses, outPath: spec.outPath, sidecarPath }
}
