/**
 * Pre-trained image backbones behind one narrow interface: a batch of uint8
 * HWC images in, a [batch, featureDim] float32 matrix out (the penultimate
 * pooled layer, classifier removed).
 *
 * The tfjs graph models are fetched at run time, so real exports need
 * network access on first use. resnet18 has no published tfjs graph model;
 * convert the torchvision weights with tfjs-converter and point --model-url
 * at the result.
 */

export type BackboneName = 'resnet18' | 'resnet50' | 'mobilenetv2' | 'efficientnetb0'

export interface FeatureExtractor {
  featureDim: number
  /** images: concatenated HWC uint8 rows; returns row-major [count, featureDim] */
  extract(
    images: Uint8Array,
    count: number,
    height: number,
    width: number,
  ): Promise<Float32Array>
}

interface BackboneSpec {
  featureDim: number
  inputSize: number
  /** 'unit' scales to [0,1]; 'torch' additionally applies ImageNet mean/std */
  normalize: 'unit' | 'torch'
  url?: string
  fromTFHub: boolean
}

export const BACKBONES: Record<BackboneName, BackboneSpec> = {
  resnet18: {
    featureDim: 512,
    inputSize: 224,
    normalize: 'torch',
    fromTFHub: false, // converted torchvision weights, supplied via --model-url
  },
  resnet50: {
    featureDim: 2048,
    inputSize: 224,
    normalize: 'unit',
    url: 'https://tfhub.dev/google/imagenet/resnet_v2_50/feature_vector/5',
    fromTFHub: true,
  },
  mobilenetv2: {
    featureDim: 1280,
    inputSize: 224,
    normalize: 'unit',
    url: 'https://tfhub.dev/google/imagenet/mobilenet_v2_100_224/feature_vector/5',
    fromTFHub: true,
  },
  efficientnetb0: {
    featureDim: 1280,
    inputSize: 224,
    normalize: 'unit',
    url: 'https://tfhub.dev/tensorflow/efficientnet/b0/feature-vector/1',
    fromTFHub: true,
  },
}

const IMAGENET_MEAN = [0.485, 0.456, 0.406]
const IMAGENET_STD = [0.229, 0.224, 0.225]

export function describePreprocessing(name: BackboneName): string {
  const spec = BACKBONES[name]
  const scale = `resize bilinear to ${spec.inputSize}x${spec.inputSize}, scale to [0,1]`
  return spec.normalize === 'torch'
    ? `${scale}, normalize with ImageNet mean/std`
    : scale
}

export async function loadBackbone(
  name: BackboneName,
  modelUrl?: string,
): Promise<FeatureExtractor> {
  const spec = BACKBONES[name]
  const url = modelUrl ?? spec.url
  if (!url) {
    throw new Error(
      `${name} has no built-in model URL; pass --model-url with a tfjs graph model ` +
        `(e.g. torchvision weights run through tfjs-converter)`,
    )
  }
  const tf = await import('@tensorflow/tfjs')
  await tf.setBackend('cpu')
  await tf.ready()
  const model = await tf.loadGraphModel(url, { fromTFHub: spec.fromTFHub && !modelUrl })

  return {
    featureDim: spec.featureDim,
    async extract(images, count, height, width) {
      const output = tf.tidy(() => {
        let batch = tf
          .tensor4d(images, [count, height, width, 3], 'int32')
          .toFloat()
          .div(255.0)
        batch = tf.image.resizeBilinear(batch as never, [spec.inputSize, spec.inputSize])
        if (spec.normalize === 'torch') {
          batch = batch.sub(tf.tensor1d(IMAGENET_MEAN)).div(tf.tensor1d(IMAGENET_STD))
        }
        let features = model.predict(batch) as InstanceType<typeof tf.Tensor>
        // some graph models keep spatial dims; pool them away
        if (features.shape.length === 4) {
          features = tf.mean(features as never, [1, 2])
        }
        return features.reshape([count, spec.featureDim])
      })
      const data = (await output.data()) as Float32Array
      output.dispose()
      return new Float32Array(data)
    },
  }
}
