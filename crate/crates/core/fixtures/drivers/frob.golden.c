#include <stddef.h>
#include <stdint.h>

int frob(int mode, const uint8_t *buf, size_t len);

static uint64_t read_le(const uint8_t **data, size_t *size, size_t width) {
  uint64_t value = 0;
  for (size_t i = 0; i < width && *size > 0; i++) {
    value |= (uint64_t)(**data) << (8 * i);
    (*data)++;
    (*size)--;
  }
  return value;
}

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) {
  int arg0 = (int)read_le(&data, &size, sizeof(int));
  frob(arg0, data, size);
  return 0;
}
