#!/usr/bin/env node
/** Command-line exporter: dataset + backbone in, FCGS feature file out. */

import yargs from 'yargs'
import { hideBin } from 'yargs/helpers'

import { BACKBONES, BackboneName, loadBackbone } from './backbone'
import { DatasetName, Split } from './datasets'
import { exportFeatures } from './export'

async function main(): Promise<void> {
  const argv = await yargs(hideBin(process.argv))
    .scriptName('fcgs-export')
    .option('dataset', {
      choices: ['cifar10', 'cifar100', 'svhn'] as const,
      demandOption: true,
      describe: 'which dataset to embed',
    })
    .option('split', {
      choices: ['train', 'test'] as const,
      default: 'train' as Split,
    })
    .option('backbone', {
      choices: Object.keys(BACKBONES) as BackboneName[],
      default: 'resnet18' as BackboneName,
      describe: 'pre-trained feature extractor',
    })
    .option('data-dir', {
      type: 'string',
      demandOption: true,
      describe: 'directory holding the downloaded dataset files',
    })
    .option('out', {
      type: 'string',
      demandOption: true,
      describe: 'output FCGS file path',
    })
    .option('batch-size', { type: 'number', default: 64 })
    .option('model-url', {
      type: 'string',
      describe: 'override the tfjs graph-model URL for the backbone',
    })
    .option('limit', {
      type: 'number',
      describe: 'export only the first N rows (smoke runs)',
    })
    .strict()
    .help()
    .parse()

  const extractor = await loadBackbone(argv.backbone, argv['model-url'])
  const summary = await exportFeatures(
    {
      dataset: argv.dataset as DatasetName,
      split: argv.split as Split,
      backbone: argv.backbone,
      outPath: argv.out,
      dataDir: argv['data-dir'],
      batchSize: argv['batch-size'],
      modelUrl: argv['model-url'],
      limit: argv.limit,
    },
    extractor,
  )
  console.log(
    `wrote ${summary.rows} rows (d=${summary.dim}, C=${summary.numClasses}) ` +
      `to ${summary.outPath} (+ ${summary.sidecarPath})`,
  )
}

main().catch((err) => {
  console.error(err instanceof Error ? err.message : err)
  process.exitCode = 1
})
