#include <stdlib.h>

void *keep;

int main(void)
{
    keep = malloc(64);
    keep = NULL;
    return 0;
}
